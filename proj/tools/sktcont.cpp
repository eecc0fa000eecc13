#include "skt/io.hpp"

int main(int argc, char** argv) {
    return skt::cli_dispatch(argc, argv);
}
