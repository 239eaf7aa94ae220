#ifndef BRIDGEKIT_FIELD_HPP
#define BRIDGEKIT_FIELD_HPP

#include <functional>
#include <memory>
#include <utility>

#include "bridgekit/bridge.hpp"

namespace bridgekit {

// Evaluable drift shared by oracle fields, trained models, and hand-specified
// test fields. Samplers and the analysis harness are field-agnostic: they only
// see this interface. zT is the pinned conditioning endpoint; endpoint-free
// fields (needs_endpoint() == false) ignore it and accept an empty vector.
class VelocityField {
  public:
    virtual ~VelocityField() = default;

    virtual Eigen::Index dim() const = 0;
    virtual FieldOutput eval(double t, const Vector& z, const Vector& zT) const = 0;
    virtual bool needs_endpoint() const { return true; }
    virtual bool provides_posterior_mean() const { return false; }
    virtual bool provides_score() const { return false; }
};

// Wraps a plain callable v(t, z) as a field; used for hand-specified drifts
// in tests and convergence studies.
class CallableField final : public VelocityField {
  public:
    using Fn = std::function<Vector(double, const Vector&)>;

    CallableField(Eigen::Index dim, Fn fn) : dim_(dim), fn_(std::move(fn)) {}

    Eigen::Index dim() const override { return dim_; }
    bool needs_endpoint() const override { return false; }

    FieldOutput eval(double t, const Vector& z, const Vector&) const override {
        FieldOutput out;
        out.velocity = fn_(t, z);
        return out;
    }

  private:
    Eigen::Index dim_;
    Fn fn_;
};

// Base field plus an injected state-independent perturbation e(t). Used by the
// bound-verification harness, where int ||e||^2 dt must be known exactly.
class PerturbedField final : public VelocityField {
  public:
    using Perturbation = std::function<Vector(double)>;

    PerturbedField(std::shared_ptr<const VelocityField> base, Perturbation e)
        : base_(std::move(base)), e_(std::move(e)) {}

    Eigen::Index dim() const override { return base_->dim(); }
    bool needs_endpoint() const override { return base_->needs_endpoint(); }
    bool provides_posterior_mean() const override { return false; }
    bool provides_score() const override { return false; }

    FieldOutput eval(double t, const Vector& z, const Vector& zT) const override {
        FieldOutput out;
        out.velocity = base_->eval(t, z, zT).velocity + e_(t);
        return out;
    }

  private:
    std::shared_ptr<const VelocityField> base_;
    Perturbation e_;
};

}  // namespace bridgekit

#endif
