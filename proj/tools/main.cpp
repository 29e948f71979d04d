#include "biphoton/cli.hpp"

int main(int argc, char** argv)
{
    return biphoton::cli::main(argc, argv);
}
