#include <CLI11.hpp>

int main(int argc, char** argv) {
    CLI::App app{"black hole beam tracer"};
    app.require_subcommand(1);
    // Subcommands are registered as their modules land; see README.
    CLI11_PARSE(app, argc, argv);
    return 0;
}
