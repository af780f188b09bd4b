#include "lwg/common.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace lwg {

int thread_count()
{
    int requested = 0;
    if (const char* env = std::getenv("LWF_THREADS")) {
        requested = std::atoi(env);
    }
    if (requested > 0) {
        return requested;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, const std::function<void(int, int)>& body)
{
    if (n <= 0) {
        return;
    }
    const int workers = std::min(thread_count(), n);
    if (workers == 1) {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int begin = w * chunk;
        const int end = std::min(n, begin + chunk);
        if (begin >= end) {
            break;
        }
        pool.emplace_back(body, begin, end);
    }
    for (auto& t : pool) {
        t.join();
    }
}

}  // namespace lwg
