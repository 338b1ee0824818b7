#include "spe/experiment.hpp"

int main(int argc, char** argv) { return spe::run_cli(argc, argv); }
