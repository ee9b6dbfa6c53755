#include <autosdt/cli.hpp>

int main(int argc, char** argv) {
    return autosdt::cli_main(argc, argv);
}
