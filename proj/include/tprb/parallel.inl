#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace tprb {

template <typename Fn>
void for_each_pixel(int width, int height, int threads, Fn &&fn) {
    const int rows = height;
    int workers = threads > 0 ? threads : int(std::max(1u, std::thread::hardware_concurrency()));
    workers = std::min(workers, std::max(rows, 1));
    std::atomic<int> next_row{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        try {
            for (int y = next_row++; y < rows; y = next_row++)
                for (int x = 0; x < width; ++x) fn(x, y);
        } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next_row = rows;
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(workers));
        for (int i = 0; i < workers; ++i) pool.emplace_back(work);
        for (auto &t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
}

}  // namespace tprb
