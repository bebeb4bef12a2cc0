#include "sgrl/embedding.hpp"

#include <stdexcept>

namespace sgrl::embed {

double dot(const Embedding& a, const Embedding& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("embedding dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) s += a.values[i] * b.values[i];
    return s;
}

double norm(const Embedding& a) { return std::sqrt(dot(a, a)); }

double cosine(const Embedding& a, const Embedding& b) {
    double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine of zero vector");
    return dot(a, b) / (na * nb);
}

void normalize(Embedding& e) {
    double n = norm(e);
    if (n == 0.0 || !std::isfinite(n)) throw std::invalid_argument("cannot normalize vector");
    for (double& v : e.values) v /= n;
}

}  // namespace sgrl::embed
