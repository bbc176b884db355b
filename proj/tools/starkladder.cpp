#include "starkladder/cli.hpp"

int main(int argc, char** argv)
{
    return starkladder::cli::run(argc, argv);
}
