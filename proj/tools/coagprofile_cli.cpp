#include <cstdio>
int main() { std::puts("coagprofile (stub)"); return 0; }
