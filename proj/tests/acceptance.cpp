#include "declutter/declutter.hpp"
int main(){return 0;}
