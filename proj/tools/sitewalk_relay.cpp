#include <csignal>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sitewalk/relay_server.hpp"

using namespace sitewalk;

int main(int argc, char** argv)
{
    CLI::App app { "Relay between mission clients and site middleware" };
    std::string configPath;
    std::string listen;
    std::string storage;
    app.add_option("--config", configPath, "Relay config JSON")->required()->check(CLI::ExistingFile);
    app.add_option("--listen", listen, "host:port, overrides the config");
    app.add_option("--storage", storage, "Capture store path, overrides the config");
    CLI11_PARSE(app, argc, argv);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    try {
        RelayConfig config = load_relay_config(configPath);
        if (!listen.empty())
            config.listen = parse_endpoint(listen);
        if (!storage.empty())
            config.storage = storage;

        RelayServer relay(std::move(config));
        relay.start();
        fmt::print("relay listening on {}:{}\n", relay.endpoint().host, relay.port());
        std::fflush(stdout);
        int sig = 0;
        sigwait(&signals, &sig);
        relay.stop();
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
