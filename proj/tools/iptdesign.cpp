#include <ipt/cli.hpp>

int main(int argc, char** argv) { return ipt::cli::run(argc, argv); }
