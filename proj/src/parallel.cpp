#include "combwalk/parallel.hpp"

#include <cstdlib>
#include <string>

namespace combwalk {

unsigned default_threads() {
    if (const char* env = std::getenv("COMBWALK_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

}  // namespace combwalk
