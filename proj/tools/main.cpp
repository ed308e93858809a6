#include "convtrack/apprunner.hpp"

int main(int argc, char** argv) { return convtrack::run_cli(argc, argv); }
