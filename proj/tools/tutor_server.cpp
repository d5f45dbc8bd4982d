// tutor-server: the REST service. Listens first, then loads the bank, so
// /health answers 503 until the exercises are ready.

#include "tutor/api.hpp"
#include "tutor/exercise_bank.hpp"

#include "httplib.h"

#include <cstdlib>
#include <iostream>
#include <thread>

using namespace tutor;

namespace {

std::string env_or(const char* name, std::string fallback)
{
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

} // namespace

int main()
{
    try {
        const std::string bank_path = env_or("BANK_PATH", "data/bank.json");
        const std::string host = env_or("HOST", "0.0.0.0");
        const int port = std::stoi(env_or("PORT", "8080"));

        auto gateway = make_gateway(GatewayConfig::from_env());
        TutorService service(gateway, ServiceConfig::from_env());

        httplib::Server server;
        service.mount(server);
        if (!server.bind_to_port(host, port)) {
            std::cerr << "error: cannot bind " << host << ":" << port << "\n";
            return 1;
        }
        std::thread listener([&] { server.listen_after_bind(); });

        try {
            service.set_bank(std::make_shared<const Bank>(load_bank(bank_path)));
        } catch (const Error& e) {
            std::cerr << "error: " << e.what() << "\n";
            server.stop();
            listener.join();
            return 1;
        }
        std::cerr << "serving " << bank_path << " on " << host << ":" << port << " (model "
                  << gateway->model_id() << (gateway->mock_mode() ? ", mock" : "") << ", profile "
                  << service.default_profile_label() << ")\n";
        listener.join();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
