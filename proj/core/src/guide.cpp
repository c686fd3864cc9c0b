#include "vguide/guide.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vguide/csv.hpp"
#include "vguide/units.hpp"

namespace vguide {

AssistanceFactor::AssistanceFactor(double xi) : xi_(xi) {
  if (!(xi >= 0.0) || !(xi <= 1.0)) {
    throw std::out_of_range("assistance factor must be in [0, 1]");
  }
}

double qbound_from_xi(AssistanceFactor xi) {
  return deg_to_rad(0.5 + 7.0 * (1.0 - xi.value()));
}

const char* to_string(GuideShape shape) {
  switch (shape) {
    case GuideShape::constant: return "constant";
    case GuideShape::tapered: return "tapered";
    case GuideShape::sinusoidal: return "sinusoidal";
    case GuideShape::custom_sampled: return "custom";
  }
  return "?";
}

GuideShape guide_shape_from_string(const std::string& name) {
  if (name == "constant") return GuideShape::constant;
  if (name == "tapered") return GuideShape::tapered;
  if (name == "sinusoidal") return GuideShape::sinusoidal;
  if (name == "custom" || name == "custom_sampled") return GuideShape::custom_sampled;
  throw std::invalid_argument("unknown guide shape: " + name);
}

double GuideSpec::width(double phase) const {
  double p = std::clamp(phase, 0.0, period_);
  switch (shape_) {
    case GuideShape::constant:
      return mean_width_;
    case GuideShape::sinusoidal:
      return mean_width_ * (1.0 + modulation_ * std::sin(2.0 * kPi * p / period_));
    case GuideShape::tapered:
      return w0_ + (w1_ - w0_) * (p / period_);
    case GuideShape::custom_sampled: {
      auto it = std::upper_bound(knot_phase_.begin(), knot_phase_.end(), p);
      std::size_t hi = static_cast<std::size_t>(it - knot_phase_.begin());
      if (hi == 0) return knot_width_.front();
      if (hi >= knot_phase_.size()) return knot_width_.back();
      double t = (p - knot_phase_[hi - 1]) / (knot_phase_[hi] - knot_phase_[hi - 1]);
      return knot_width_[hi - 1] + t * (knot_width_[hi] - knot_width_[hi - 1]);
    }
  }
  return mean_width_;
}

GuideSpec make_shape(GuideShape tag, const ShapeParams& params,
                     AssistanceFactor xi, double period) {
  if (!(period > 0.0) || !std::isfinite(period)) {
    throw std::invalid_argument("make_shape: period must be positive");
  }
  const double mean = qbound_from_xi(xi);
  GuideSpec spec(tag, xi, period);
  spec.mean_width_ = mean;

  switch (tag) {
    case GuideShape::constant:
      break;

    case GuideShape::sinusoidal:
      if (!(params.modulation >= 0.0) || params.modulation >= 1.0) {
        throw std::invalid_argument(
            "make_shape: sinusoidal modulation must be in [0, 1) for positive width");
      }
      spec.modulation_ = params.modulation;
      break;

    case GuideShape::tapered: {
      if (!(params.taper_start > 0.0) || !(params.taper_end > 0.0)) {
        throw std::invalid_argument("make_shape: taper endpoints must be positive");
      }
      // Linear profile scaled so its mean over [0, T] equals `mean`.
      double raw_mean = 0.5 * (params.taper_start + params.taper_end);
      spec.w0_ = params.taper_start * mean / raw_mean;
      spec.w1_ = params.taper_end * mean / raw_mean;
      break;
    }

    case GuideShape::custom_sampled: {
      const auto& ph = params.sample_phase;
      const auto& w = params.sample_width;
      if (ph.size() < 2 || ph.size() != w.size()) {
        throw std::invalid_argument("make_shape: custom shape needs >= 2 samples");
      }
      if (ph.front() != 0.0 || std::abs(ph.back() - period) > 1e-9) {
        throw std::invalid_argument("make_shape: custom samples must span [0, T]");
      }
      double integral = 0.0;
      for (std::size_t i = 0; i + 1 < ph.size(); ++i) {
        if (!(ph[i + 1] > ph[i])) {
          throw std::invalid_argument("make_shape: custom phases must be strictly increasing");
        }
        if (!(w[i] > 0.0) || !(w[i + 1] > 0.0)) {
          throw std::invalid_argument("make_shape: custom widths must be positive");
        }
        integral += 0.5 * (w[i] + w[i + 1]) * (ph[i + 1] - ph[i]);
      }
      double scale = mean / (integral / period);
      spec.knot_phase_ = ph;
      spec.knot_width_ = w;
      for (auto& x : spec.knot_width_) x *= scale;
      break;
    }
  }
  return spec;
}

ShapeParams shape_params_from_csv(const std::string& path) {
  CsvTable t = read_csv(path);
  int cp = t.column("phase_s"), cw = t.column("qbound_rad");
  if (cp < 0 || cw < 0) {
    throw std::runtime_error(path + ": shape table needs columns phase_s,qbound_rad");
  }
  ShapeParams p;
  for (const auto& row : t.rows) {
    p.sample_phase.push_back(row[cp]);
    p.sample_width.push_back(row[cw]);
  }
  return p;
}

double eval_h(const GuideSpec& spec, double q_des, double q, double phase) {
  double e = (q_des - q) / spec.width(phase);
  return 1.0 - e * e;
}

}  // namespace vguide
