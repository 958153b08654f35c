#include "commands.hpp"

int main(int argc, char** argv) { return selboost::cli::run(argc, argv); }
