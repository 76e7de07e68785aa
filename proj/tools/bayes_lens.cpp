#include "cli.hpp"

int main(int argc, char** argv) { return bayes_lens::cli::run(argc, argv); }
