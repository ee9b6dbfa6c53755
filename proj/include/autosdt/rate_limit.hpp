#pragma once

#include <chrono>
#include <mutex>
#include <thread>

namespace autosdt {

// Serializes bursts against a provider: at most `rps` acquisitions per second,
// callers beyond that sleep until their slot. A rate of zero disables the
// limiter entirely.
class RateLimiter {
public:
    explicit RateLimiter(double rps = 0.0) { set_rate(rps); }

    void set_rate(double rps) {
        std::lock_guard<std::mutex> lock(m_mutex);
        m_interval = rps > 0.0 ? std::chrono::duration<double>(1.0 / rps)
                               : std::chrono::duration<double>(0.0);
        m_next = std::chrono::steady_clock::now();
    }

    void acquire() {
        std::chrono::steady_clock::time_point wake;
        {
            std::lock_guard<std::mutex> lock(m_mutex);
            if (m_interval.count() == 0.0) return;
            auto now = std::chrono::steady_clock::now();
            if (m_next < now) m_next = now;
            wake = m_next;
            m_next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(m_interval);
        }
        std::this_thread::sleep_until(wake);
    }

private:
    std::mutex m_mutex;
    std::chrono::duration<double> m_interval{0.0};
    std::chrono::steady_clock::time_point m_next;
};

} // namespace autosdt
