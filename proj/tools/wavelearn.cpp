#include "wavelearn/cli.hpp"

int main(int argc, char** argv)
{
    return wavelearn::run_cli(argc, argv);
}
