#include "lensopt/quadrature.hpp"
#include "lensopt/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace lensopt {

namespace {

QuadRule1D compute(int n)
{
    QuadRule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = pk;
            }
            if (n == 1)
                p0 = 1.0, p1 = x;
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16)
                break;
        }
        // ascending order on [0,1]
        r.nodes[n - 1 - i] = 0.5 * (x + 1.0);
        r.weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return r;
}

} // namespace

const QuadRule1D& gauss_legendre(int n)
{
    if (n < 1 || n > 64)
        throw DomainError("unsupported quadrature order");
    static std::map<int, QuadRule1D> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end())
        it = cache.emplace(n, compute(n)).first;
    return it->second;
}

QuadRule1D gauss_legendre(int n, double a, double b)
{
    QuadRule1D r = gauss_legendre(n);
    for (auto& x : r.nodes)
        x = a + (b - a) * x;
    for (auto& w : r.weights)
        w *= (b - a);
    return r;
}

} // namespace lensopt
