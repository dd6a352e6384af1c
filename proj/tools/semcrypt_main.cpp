#include "semcrypt/cli.hpp"

int main(int argc, char** argv) { return semcrypt::cli::run(argc, argv); }
