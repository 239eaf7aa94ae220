#include "bridgekit/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "bridgekit/bridge.hpp"

namespace bridgekit {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd xavier(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-a, a);
    return m;
}

}  // namespace

VelocityNet::VelocityNet(Eigen::Index latent_dim, Eigen::Index cond_dim, int hidden_width,
                         Parameterization parameterization, const Schedule& schedule,
                         std::uint64_t init_seed)
    : latent_dim_(latent_dim), cond_dim_(cond_dim), width_(hidden_width),
      parameterization_(parameterization), schedule_(schedule) {
    if (latent_dim_ < 1) throw std::invalid_argument("VelocityNet: latent_dim must be >= 1");
    if (cond_dim_ < 0) throw std::invalid_argument("VelocityNet: cond_dim must be >= 0");
    if (width_ < 1) throw std::invalid_argument("VelocityNet: hidden width must be >= 1");
    const Eigen::Index in = 2 * latent_dim_ + kTimeFeatures;
    Rng rng(init_seed, 0);
    w1 = xavier(width_, in, rng);
    b1 = Eigen::MatrixXd::Zero(width_, 1);
    wc = cond_dim_ > 0 ? xavier(width_, cond_dim_, rng) : Eigen::MatrixXd(width_, 0);
    cond_scale = Eigen::MatrixXd::Zero(1, 1);  // zero-init conditioning scale
    w2 = xavier(width_, width_, rng);
    b2 = Eigen::MatrixXd::Zero(width_, 1);
    w3 = xavier(latent_dim_, width_, rng);
    b3 = Eigen::MatrixXd::Zero(latent_dim_, 1);
    g_w1 = Eigen::MatrixXd::Zero(w1.rows(), w1.cols());
    g_b1 = Eigen::MatrixXd::Zero(b1.rows(), b1.cols());
    g_wc = Eigen::MatrixXd::Zero(wc.rows(), wc.cols());
    g_cond_scale = Eigen::MatrixXd::Zero(1, 1);
    g_w2 = Eigen::MatrixXd::Zero(w2.rows(), w2.cols());
    g_b2 = Eigen::MatrixXd::Zero(b2.rows(), b2.cols());
    g_w3 = Eigen::MatrixXd::Zero(w3.rows(), w3.cols());
    g_b3 = Eigen::MatrixXd::Zero(b3.rows(), b3.cols());
}

Vector VelocityNet::time_embedding(double t) {
    Vector e(kTimeFeatures);
    double freq = kPi;
    for (int k = 0; k < kTimeFeatures / 2; ++k) {
        e[2 * k] = std::sin(freq * t);
        e[2 * k + 1] = std::cos(freq * t);
        freq *= 2.0;
    }
    return e;
}

std::vector<VelocityNet::ParamRef> VelocityNet::params() {
    return {
        {"w1", &w1, &g_w1},         {"b1", &b1, &g_b1},
        {"wc", &wc, &g_wc},         {"cond_scale", &cond_scale, &g_cond_scale},
        {"w2", &w2, &g_w2},         {"b2", &b2, &g_b2},
        {"w3", &w3, &g_w3},         {"b3", &b3, &g_b3},
    };
}

std::vector<const Eigen::MatrixXd*> VelocityNet::param_values() const {
    return {&w1, &b1, &wc, &cond_scale, &w2, &b2, &w3, &b3};
}

Eigen::MatrixXd VelocityNet::forward_batch(const Eigen::MatrixXd& z, const Vector& t,
                                           const Eigen::MatrixXd& zT,
                                           const Eigen::MatrixXd& cond,
                                           const Vector& cond_mask, Eigen::MatrixXd* h1,
                                           Eigen::MatrixXd* h2,
                                           Eigen::MatrixXd* crow) const {
    const Eigen::Index b = z.rows();
    Eigen::MatrixXd x(b, 2 * latent_dim_ + kTimeFeatures);
    for (Eigen::Index i = 0; i < b; ++i) {
        x.block(i, 0, 1, latent_dim_) = z.row(i);
        x.block(i, latent_dim_, 1, kTimeFeatures) = time_embedding(t[i]).transpose();
        x.block(i, latent_dim_ + kTimeFeatures, 1, latent_dim_) = zT.row(i);
    }
    Eigen::MatrixXd c(b, cond_dim_);
    if (cond_dim_ > 0) {
        if (cond.rows() != b || cond.cols() != cond_dim_)
            throw std::invalid_argument("VelocityNet: condition batch shape mismatch");
        c = cond_mask.asDiagonal() * cond;
    }
    Eigen::MatrixXd h1pre = x * w1.transpose();
    h1pre.rowwise() += b1.col(0).transpose();
    if (cond_dim_ > 0) h1pre.noalias() += cond_scale(0, 0) * (c * wc.transpose());
    Eigen::MatrixXd h1v = h1pre.array().tanh().matrix();
    Eigen::MatrixXd h2pre = h1v * w2.transpose();
    h2pre.rowwise() += b2.col(0).transpose();
    Eigen::MatrixXd h2v = h2pre.array().tanh().matrix();
    Eigen::MatrixXd out = h2v * w3.transpose();
    out.rowwise() += b3.col(0).transpose();
    if (h1) *h1 = std::move(h1v);
    if (h2) *h2 = std::move(h2v);
    if (crow) *crow = std::move(c);
    return out;
}

Vector VelocityNet::forward(double t, const Vector& z, const Vector& zT,
                            const Vector& cond) const {
    if (z.size() != latent_dim_ || zT.size() != latent_dim_)
        throw std::invalid_argument("VelocityNet::forward: latent dimension mismatch");
    Eigen::MatrixXd zc = z.transpose();
    Eigen::MatrixXd zTc = zT.transpose();
    Vector tb(1);
    tb[0] = t;
    Eigen::MatrixXd c(1, cond_dim_);
    if (cond_dim_ > 0) {
        if (cond.size() == 0)
            c.setZero();
        else if (cond.size() == cond_dim_)
            c = cond.transpose();
        else
            throw std::invalid_argument("VelocityNet::forward: condition dimension mismatch");
    }
    Vector mask = Vector::Ones(1);
    return forward_batch(zc, tb, zTc, c, mask, nullptr, nullptr, nullptr).row(0);
}

Vector VelocityNet::velocity(double t, const Vector& z, const Vector& zT,
                             const Vector& cond) const {
    Vector out = forward(t, z, zT, cond);
    if (parameterization_ == Parameterization::Velocity) return out;
    // PosteriorMean head: reconstruct velocity from the conditional means.
    const ScheduleWeights w = schedule_.eval(t);
    Vector u_hat;
    if (w.gamma > 0.0)
        u_hat = (z - w.alpha * out - w.beta * zT) / w.gamma;
    else
        u_hat = Vector::Zero(latent_dim_);
    return score_to_velocity(out, u_hat, zT, t, schedule_);
}

double VelocityNet::loss_and_gradients(const Eigen::MatrixXd& z, const Vector& t,
                                       const Eigen::MatrixXd& zT,
                                       const Eigen::MatrixXd& cond,
                                       const Vector& cond_mask,
                                       const Eigen::MatrixXd& target) {
    const Eigen::Index b = z.rows();
    Eigen::MatrixXd x(b, 2 * latent_dim_ + kTimeFeatures);
    for (Eigen::Index i = 0; i < b; ++i) {
        x.block(i, 0, 1, latent_dim_) = z.row(i);
        x.block(i, latent_dim_, 1, kTimeFeatures) = time_embedding(t[i]).transpose();
        x.block(i, latent_dim_ + kTimeFeatures, 1, latent_dim_) = zT.row(i);
    }
    Eigen::MatrixXd c(b, std::max<Eigen::Index>(cond_dim_, 0));
    if (cond_dim_ > 0) c = cond_mask.asDiagonal() * cond;

    Eigen::MatrixXd cwt;  // c * wc^T, reused by the cond_scale gradient
    Eigen::MatrixXd h1pre = x * w1.transpose();
    h1pre.rowwise() += b1.col(0).transpose();
    if (cond_dim_ > 0) {
        cwt.noalias() = c * wc.transpose();
        h1pre.noalias() += cond_scale(0, 0) * cwt;
    }
    const Eigen::MatrixXd h1 = h1pre.array().tanh().matrix();
    Eigen::MatrixXd h2pre = h1 * w2.transpose();
    h2pre.rowwise() += b2.col(0).transpose();
    const Eigen::MatrixXd h2 = h2pre.array().tanh().matrix();
    Eigen::MatrixXd out = h2 * w3.transpose();
    out.rowwise() += b3.col(0).transpose();

    const Eigen::MatrixXd diff = out - target;
    const double loss = diff.squaredNorm() / static_cast<double>(b);

    const Eigen::MatrixXd g_out = (2.0 / static_cast<double>(b)) * diff;
    g_w3.noalias() = g_out.transpose() * h2;
    g_b3 = g_out.colwise().sum().transpose();
    Eigen::MatrixXd g_h2 =
        ((g_out * w3).array() * (1.0 - h2.array().square())).matrix();
    g_w2.noalias() = g_h2.transpose() * h1;
    g_b2 = g_h2.colwise().sum().transpose();
    Eigen::MatrixXd g_h1 =
        ((g_h2 * w2).array() * (1.0 - h1.array().square())).matrix();
    g_w1.noalias() = g_h1.transpose() * x;
    g_b1 = g_h1.colwise().sum().transpose();
    if (cond_dim_ > 0) {
        g_wc.noalias() = cond_scale(0, 0) * (g_h1.transpose() * c);
        g_cond_scale(0, 0) = (g_h1.array() * cwt.array()).sum();
    } else {
        g_cond_scale(0, 0) = 0.0;
    }
    return loss;
}

double VelocityNet::loss_only(const Eigen::MatrixXd& z, const Vector& t,
                              const Eigen::MatrixXd& zT, const Eigen::MatrixXd& cond,
                              const Vector& cond_mask,
                              const Eigen::MatrixXd& target) const {
    Eigen::MatrixXd out = forward_batch(z, t, zT, cond, cond_mask, nullptr, nullptr, nullptr);
    return (out - target).squaredNorm() / static_cast<double>(z.rows());
}

TrainTrace train(VelocityNet& net, const DomainSampler& sampler, const TrainConfig& cfg) {
    if (cfg.cond_dropout < 0.0 || cfg.cond_dropout > 1.0)
        throw std::invalid_argument("train: cond_dropout must be in [0, 1]");
    const Schedule& sched = net.schedule();
    const double eps = Schedule::kClipEps;
    const Eigen::Index d = net.latent_dim();
    const Eigen::Index dc = net.cond_dim();

    Rng data_rng(cfg.seed, 1);
    Rng val_rng(cfg.seed, 2);

    auto draw_batch = [&](int count, Rng& rng, Eigen::MatrixXd& z, Vector& t,
                          Eigen::MatrixXd& zT, Eigen::MatrixXd& cond, Vector& mask,
                          Eigen::MatrixXd& target, bool with_dropout) {
        z.resize(count, d);
        t.resize(count);
        zT.resize(count, d);
        cond.resize(count, dc);
        mask.resize(count);
        target.resize(count, d);
        for (int i = 0; i < count; ++i) {
            TrainSample s = sampler(rng);
            if (s.z0.size() != d || s.zT.size() != d)
                throw std::invalid_argument("train: domain sampler dimension mismatch");
            const double ti = rng.uniform(eps, 1.0 - eps);
            const Vector noise = rng.normal_vector(d);
            const InterpolantSample is = sample_zt(s.z0, s.zT, ti, sched, noise);
            z.row(i) = is.zt.transpose();
            t[i] = ti;
            zT.row(i) = s.zT.transpose();
            if (dc > 0) {
                if (s.cond.size() != dc)
                    throw std::invalid_argument("train: condition dimension mismatch");
                cond.row(i) = s.cond.transpose();
            }
            mask[i] = with_dropout && rng.uniform() < cfg.cond_dropout ? 0.0 : 1.0;
            if (net.parameterization() == Parameterization::Velocity)
                target.row(i) = velocity_target(s.z0, s.zT, ti, sched, is.eps_used).transpose();
            else
                target.row(i) = s.z0.transpose();
        }
    };

    Eigen::MatrixXd vz, vzT, vcond, vtarget;
    Vector vt, vmask;
    draw_batch(cfg.validation_batch, val_rng, vz, vt, vzT, vcond, vmask, vtarget, false);

    // Adaptive-moment gradient descent state.
    auto prefs = net.params();
    std::vector<Eigen::MatrixXd> m(prefs.size()), v(prefs.size());
    for (std::size_t i = 0; i < prefs.size(); ++i) {
        m[i] = Eigen::MatrixXd::Zero(prefs[i].value->rows(), prefs[i].value->cols());
        v[i] = m[i];
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;

    TrainTrace trace;
    Eigen::MatrixXd bz, bzT, bcond, btarget;
    Vector bt, bmask;
    for (int step = 0; step < cfg.steps; ++step) {
        draw_batch(cfg.batch, data_rng, bz, bt, bzT, bcond, bmask, btarget, true);
        const double loss = net.loss_and_gradients(bz, bt, bzT, bcond, bmask, btarget);
        if (!std::isfinite(loss)) {
            std::ostringstream msg;
            msg << "train: NaN/inf loss at step " << step << " (lr=" << cfg.learn_rate << ")";
            throw std::runtime_error(msg.str());
        }
        trace.train_loss.push_back(loss);
        double lr = cfg.learn_rate;
        if (cfg.cosine_decay)
            lr *= 0.5 * (1.0 + std::cos(3.14159265358979323846 * step / cfg.steps));
        const double bc1 = 1.0 - std::pow(beta1, step + 1);
        const double bc2 = 1.0 - std::pow(beta2, step + 1);
        for (std::size_t i = 0; i < prefs.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * (*prefs[i].grad);
            v[i] = (beta2 * v[i].array() + (1.0 - beta2) * prefs[i].grad->array().square())
                       .matrix();
            prefs[i].value->array() -=
                lr * (m[i].array() / bc1) / ((v[i].array() / bc2).sqrt() + adam_eps);
        }
        if (step % cfg.validation_every == 0 || step + 1 == cfg.steps)
            trace.validation_loss.push_back(
                net.loss_only(vz, vt, vzT, vcond, vmask, vtarget));
    }
    return trace;
}

Vector eval_cfg(const VelocityNet& net, double t, const Vector& z, const Vector& zT,
                const Vector& cond, double s, double t_min, double t_max) {
    if (s < 0.0) throw std::invalid_argument("eval_cfg: guidance scale must be >= 0");
    const bool cfg_on = (s > 1.0) && (t >= t_min && t <= t_max);
    const Vector v_cond = net.velocity(t, z, zT, cond);
    if (!cfg_on) return v_cond;
    const Vector v_uncond = net.velocity(t, z, zT, Vector::Zero(net.cond_dim()));
    return v_uncond + s * (v_cond - v_uncond);
}

FieldOutput TrainedField::eval(double t, const Vector& z, const Vector& zT) const {
    FieldOutput out;
    out.velocity = eval_cfg(*net_, t, z, zT, cond_, s_, t_min_, t_max_);
    if (net_->parameterization() == Parameterization::PosteriorMean) {
        out.posterior_mean = net_->forward(t, z, zT, cond_);
        const ScheduleWeights w = net_->schedule().eval(t);
        if (w.gamma > 0.0) {
            out.noise_mean = (z - w.alpha * (*out.posterior_mean) - w.beta * zT) / w.gamma;
            out.score = -(*out.noise_mean) / w.gamma;
        }
    }
    return out;
}

namespace {

void append_f32(std::string& buf, const Eigen::MatrixXd& m) {
    static_assert(std::endian::native == std::endian::little,
                  "checkpoint writer assumes a little-endian host");
    // column-major storage order, matching Eigen's default
    for (Eigen::Index j = 0; j < m.cols(); ++j)
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            const float f = static_cast<float>(m(i, j));
            const char* p = reinterpret_cast<const char*>(&f);
            buf.append(p, 4);
        }
}

}  // namespace

void VelocityNet::save(const std::string& path, std::uint64_t seed) const {
    nlohmann::json header;
    header["format"] = "bridgekit-checkpoint-v1";
    header["latent_dim"] = latent_dim_;
    header["cond_dim"] = cond_dim_;
    header["hidden_width"] = width_;
    header["parameterization"] =
        parameterization_ == Parameterization::Velocity ? "velocity" : "posterior_mean";
    header["schedule"] = {{"kind", schedule_.kind_name()},
                          {"gamma_max", schedule_.gamma_max()},
                          {"beta_min", schedule_.beta_min()},
                          {"beta_max", schedule_.beta_max()}};
    header["seed"] = seed;
    header["dtype"] = "float32-le";
    nlohmann::json tensors = nlohmann::json::array();
    std::string blob;
    const char* names[] = {"w1", "b1", "wc", "cond_scale", "w2", "b2", "w3", "b3"};
    auto values = param_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        tensors.push_back({{"name", names[i]},
                           {"rows", values[i]->rows()},
                           {"cols", values[i]->cols()},
                           {"offset", blob.size()}});
        append_f32(blob, *values[i]);
    }
    header["tensors"] = tensors;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("VelocityNet::save: cannot open " + path);
    f << header.dump() << '\n';
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

VelocityNet VelocityNet::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("VelocityNet::load: cannot open " + path);
    std::string header_line;
    std::getline(f, header_line);
    nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.value("format", "") != "bridgekit-checkpoint-v1")
        throw std::runtime_error("VelocityNet::load: unrecognized checkpoint format");
    const auto& js = header.at("schedule");
    Schedule sched = Schedule::from_kind(js.at("kind").get<std::string>(),
                                         js.at("gamma_max").get<double>(),
                                         js.at("beta_min").get<double>(),
                                         js.at("beta_max").get<double>());
    VelocityNet net(header.at("latent_dim").get<Eigen::Index>(),
                    header.at("cond_dim").get<Eigen::Index>(),
                    header.at("hidden_width").get<int>(),
                    header.value("parameterization", "velocity") == "posterior_mean"
                        ? Parameterization::PosteriorMean
                        : Parameterization::Velocity,
                    sched, 0);
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    auto prefs = net.params();
    for (const auto& tj : header.at("tensors")) {
        const std::string name = tj.at("name").get<std::string>();
        const Eigen::Index rows = tj.at("rows").get<Eigen::Index>();
        const Eigen::Index cols = tj.at("cols").get<Eigen::Index>();
        const std::size_t offset = tj.at("offset").get<std::size_t>();
        Eigen::MatrixXd* dst = nullptr;
        for (auto& p : prefs)
            if (p.name == name) dst = p.value;
        if (!dst) throw std::runtime_error("VelocityNet::load: unknown tensor " + name);
        if (dst->rows() != rows || dst->cols() != cols)
            throw std::runtime_error("VelocityNet::load: shape mismatch for " + name);
        const std::size_t need = offset + 4ull * rows * cols;
        if (blob.size() < need)
            throw std::runtime_error("VelocityNet::load: truncated tensor data");
        const char* p = blob.data() + offset;
        for (Eigen::Index j = 0; j < cols; ++j)
            for (Eigen::Index i = 0; i < rows; ++i) {
                float v;
                std::memcpy(&v, p, 4);
                p += 4;
                (*dst)(i, j) = static_cast<double>(v);
            }
    }
    return net;
}

}  // namespace bridgekit
