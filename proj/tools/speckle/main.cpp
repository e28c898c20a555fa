#include "cli_common.hpp"
#include "commands.hpp"
#include "speckle/error.hpp"

#include <iostream>

int main(int argc, char** argv) {
    using namespace speckle;
    CLI::App app{"Speckle-tracking X-ray phase-contrast toolkit"};
    app.set_version_flag("--version", "speckle 0.1.0");
    std::function<int()> action;
    cli::register_commands(app, action);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return cli::kParameter;
    }

    try {
        return action ? action() : cli::kParameter;
    } catch (const ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kParameter;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kIo;
    } catch (const VerificationError& e) {
        std::cerr << "verification failed: " << e.what() << "\n";
        return cli::kVerification;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return cli::kIo;
    }
}
