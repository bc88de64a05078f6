#include <iostream>
#include <string>
#include <vector>

#include "rattle/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    try {
        const auto cfg = rattle::cli::parse_config(args);
        const int code = rattle::cli::run(cfg, std::cout);
        for (const auto& path : rattle::cli::detail::written) std::cout << "wrote " << path << '\n';
        return code;
    } catch (const rattle::cli::HelpRequested& h) {
        std::cout << h.what();
        return 0;
    } catch (const rattle::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return rattle::exit_code(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error [IoError]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
