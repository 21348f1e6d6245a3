#include "sor/scenario_io.hpp"

int main(int argc, char** argv) {
    return sor::run_cli(argc, argv);
}
