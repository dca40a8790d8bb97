// Catch2 amalgamated implementation (provides main); linked into every
// unit-test binary.
#include <catch2/catch_amalgamated.cpp>
