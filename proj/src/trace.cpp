#include "keyatm/trace.hpp"

#include <stdexcept>

namespace keyatm {

const char* variant_name(Variant v)
{
    switch (v) {
    case Variant::base: return "base";
    case Variant::covariate: return "covariate";
    case Variant::dynamic: return "dynamic";
    }
    return "?";
}

ChainTrace::ChainTrace(Variant variant, long thinning, long burn_in)
    : variant_(variant), thinning_(thinning), burn_in_(burn_in)
{
    if (thinning < 1)
        throw std::invalid_argument("trace: thinning must be at least 1");
}

void ChainTrace::record(Draw draw)
{
    if (draw.iteration % thinning_ != 0)
        throw std::logic_error("trace: iteration is not on the thinning grid");
    if (!draws_.empty() && draw.iteration != draws_.back().iteration + thinning_)
        throw std::logic_error("trace: draws must be recorded at every thinning interval");
    draws_.push_back(std::move(draw));
}

std::vector<const Draw*> ChainTrace::kept() const
{
    std::vector<const Draw*> out;
    for (const auto& d : draws_)
        if (d.iteration > burn_in_)
            out.push_back(&d);
    return out;
}

} // namespace keyatm
