#include <doctest.h>
// filled in as the corresponding module lands
