#include "lgds/harness.hpp"

int main(int argc, char** argv) { return lgds::run_cli(argc, argv); }
