#include <chrono>
#include <csignal>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sitewalk/errors.hpp"
#include "sitewalk/middleware.hpp"

using namespace sitewalk;

namespace {

volatile std::sig_atomic_t gStop = 0;

void on_signal(int) { gStop = 1; }

} // namespace

int main(int argc, char** argv)
{
    CLI::App app { "Site middleware driving the simulated robot" };
    std::string configPath;
    app.add_option("--config", configPath, "Middleware config JSON")->required()->check(CLI::ExistingFile);
    CLI11_PARSE(app, argc, argv);

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        const MiddlewareConfig config = load_middleware_config(configPath);
        MiddlewareNode node(config.relay, config.token, config.project_id, load_building_model_file(config.model_path),
                            config.options);
        node.start();
        fmt::print("middleware online for project {} via {}:{}\n", config.project_id, config.relay.host,
                   config.relay.port);
        std::fflush(stdout);
        while (!gStop && node.running())
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        const bool lost = !node.running();
        node.stop();
        if (lost) {
            fmt::print(stderr, "relay connection lost\n");
            return 3;
        }
    } catch (const RemoteError& e) {
        fmt::print(stderr, "{}\n", e.what());
        return e.code() == "UNAUTHORIZED" ? 4 : 3;
    } catch (const ConnectionError& e) {
        fmt::print(stderr, "connection: {}\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
