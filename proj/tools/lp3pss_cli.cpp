#include "lp3pss/cli.hpp"

int main(int argc, char** argv) { return lp3pss::cli_main(argc, argv); }
