#include <cmath>
#include <stdexcept>
#include <string>

#include "quantshape/quantsim.hpp"

namespace quantshape {

QuantizerSpec::QuantizerSpec(int bits, double interval)
    : bits_(bits), interval_(interval), saturation_(0.5 * (std::ldexp(1.0, bits) - 1.0) * interval) {}

QuantizerSpec QuantizerSpec::from_bits(int bits, double interval) {
    if (bits < 1 || bits > 52) throw std::invalid_argument("QuantizerSpec: bits must be in [1, 52]");
    if (!(interval > 0.0) || !std::isfinite(interval)) {
        throw std::invalid_argument("QuantizerSpec: interval must be finite and > 0");
    }
    return QuantizerSpec(bits, interval);
}

double midrise(const QuantizerSpec& spec, double xi) {
    if (!std::isfinite(xi)) throw std::invalid_argument("midrise: non-finite input");
    const double d = spec.interval();
    const double l = spec.saturation();
    const double level = (std::floor(xi / d) + 0.5) * d;
    if (level > l) return l;
    if (level < -l) return -l;
    return level;
}

FeedbackQuantizer::FeedbackQuantizer(QuantizerSpec spec, StateSpace feedback)
    : spec_(spec), feedback_(std::move(feedback)), state_(Vector::Zero(feedback_.order())) {
    if (feedback_.D() != 0.0) {
        throw std::invalid_argument("FeedbackQuantizer: feedback filter R[z] - 1 must be strictly proper");
    }
}

FeedbackQuantizer FeedbackQuantizer::with_fir(QuantizerSpec spec, const FirFilter& filter) {
    return FeedbackQuantizer(spec, fir_realization(filter).with_feedthrough(0.0));
}

FeedbackQuantizer FeedbackQuantizer::static_only(QuantizerSpec spec) {
    return FeedbackQuantizer(spec, StateSpace::gain(0.0));
}

QuantizerStep FeedbackQuantizer::step(double y) {
    if (!std::isfinite(y)) throw std::invalid_argument("FeedbackQuantizer::step: non-finite input");
    QuantizerStep s;
    s.eta = feedback_.order() > 0 ? feedback_.C().dot(state_) : 0.0;
    s.xi = y + s.eta;
    s.overload = std::abs(s.xi) > spec_.overload_threshold();
    s.v = midrise(spec_, s.xi);
    s.w = s.v - s.xi;
    if (feedback_.order() > 0) state_ = feedback_.A() * state_ + feedback_.B() * s.w;
    return s;
}

void FeedbackQuantizer::reset() { state_.setZero(); }

bool verify_no_overload(const SimTrace& trace, const QuantizerSpec& spec) {
    return trace.overload_count == 0 && trace.max_abs_xi <= spec.overload_threshold();
}

std::vector<double> simulate(const StateSpace& s, const std::vector<double>& u) {
    std::vector<double> y;
    y.reserve(u.size());
    Vector x = Vector::Zero(s.order());
    for (double uk : u) {
        y.push_back(s.C().dot(x) + s.D() * uk);
        if (s.order() > 0) x = s.A() * x + s.B() * uk;
    }
    return y;
}

}  // namespace quantshape
