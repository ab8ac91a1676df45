#include <qidiv/cli.hpp>

int main(int argc, char** argv) { return qidiv::cli::run(argc, argv); }
