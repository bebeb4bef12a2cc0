#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace sgrl::embed {

// Unit-norm real vector shared by the text and segment encoders.
struct Embedding {
    std::vector<double> values;

    std::size_t dim() const { return values.size(); }
};

double dot(const Embedding& a, const Embedding& b);
double norm(const Embedding& a);
double cosine(const Embedding& a, const Embedding& b);

// Scales to unit L2 norm in place. Throws std::invalid_argument on a
// zero or non-finite vector.
void normalize(Embedding& e);

// One environment frame: a fixed-dimension feature vector plus the set of
// canonical event identifiers active at that frame (synthetic backend only).
struct FrameFeature {
    std::vector<double> values;
    std::vector<std::string> event_tags;
};

}  // namespace sgrl::embed
