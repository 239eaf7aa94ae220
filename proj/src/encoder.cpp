#include "bridgekit/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include <Eigen/Dense>

namespace bridgekit {

Eigen::VectorXd gaussian_kernel(double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_kernel: sigma must be positive");
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    Eigen::VectorXd k(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i)
        k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    k /= k.sum();
    return k;
}

namespace {

// 1D correlation along columns with replicate borders.
Image blur_vertical(const Image& img, const Eigen::VectorXd& k) {
    const int radius = static_cast<int>(k.size() / 2);
    Image out(img.rows(), img.cols());
    for (Eigen::Index c = 0; c < img.cols(); ++c)
        for (Eigen::Index r = 0; r < img.rows(); ++r) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) {
                Eigen::Index rr = r + i;
                if (rr < 0) rr = 0;
                if (rr >= img.rows()) rr = img.rows() - 1;
                acc += k[i + radius] * img(rr, c);
            }
            out(r, c) = acc;
        }
    return out;
}

}  // namespace

Image gaussian_blur(const Image& img, double sigma) {
    const Eigen::VectorXd k = gaussian_kernel(sigma);
    Image tmp = blur_vertical(img, k);
    return blur_vertical(tmp.transpose(), k).transpose();
}

Image retina_apply(const RetinaFilter& filter, const Image& image) {
    if (filter.iterations < 1)
        throw std::invalid_argument("retina_apply: iterations must be >= 1");
    const double widest = filter.sigma_s(filter.iterations);
    const int support = 2 * static_cast<int>(std::ceil(4.0 * widest)) + 1;
    if (image.rows() < support || image.cols() < support) {
        std::ostringstream msg;
        msg << "retina_apply: image " << image.rows() << "x" << image.cols()
            << " smaller than kernel support " << support;
        throw std::invalid_argument(msg.str());
    }
    Image cur = image;
    for (int it = 1; it <= filter.iterations; ++it) {
        const Image center = gaussian_blur(cur, filter.sigma_c);
        const Image surround = gaussian_blur(cur, filter.sigma_s(it));
        cur = center - filter.w_s * surround;
    }
    return cur;
}

Eigen::VectorXd patch_features(const RetinaFilter& filter, const Image& image, int grid_n) {
    if (grid_n < 1) throw std::invalid_argument("patch_features: grid_n must be >= 1");
    const Image filtered = retina_apply(filter, image);
    const Eigen::Index rows = filtered.rows(), cols = filtered.cols();
    if (rows < grid_n || cols < grid_n)
        throw std::invalid_argument("patch_features: image smaller than patch grid");

    // central-difference gradients, replicated at borders
    Image gx(rows, cols), gy(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Eigen::Index cm = c == 0 ? 0 : c - 1;
            const Eigen::Index cp = c == cols - 1 ? cols - 1 : c + 1;
            const Eigen::Index rm = r == 0 ? 0 : r - 1;
            const Eigen::Index rp = r == rows - 1 ? rows - 1 : r + 1;
            gx(r, c) = 0.5 * (filtered(r, cp) - filtered(r, cm));
            gy(r, c) = 0.5 * (filtered(rp, c) - filtered(rm, c));
        }

    Eigen::VectorXd out(6 * grid_n * grid_n);
    int idx = 0;
    for (int pr = 0; pr < grid_n; ++pr)
        for (int pc = 0; pc < grid_n; ++pc) {
            const Eigen::Index r0 = rows * pr / grid_n;
            const Eigen::Index r1 = rows * (pr + 1) / grid_n;
            const Eigen::Index c0 = cols * pc / grid_n;
            const Eigen::Index c1 = cols * (pc + 1) / grid_n;
            double mean = 0.0, mag_mean = 0.0;
            double hist[4] = {0.0, 0.0, 0.0, 0.0};
            const double count = static_cast<double>((r1 - r0) * (c1 - c0));
            for (Eigen::Index r = r0; r < r1; ++r)
                for (Eigen::Index c = c0; c < c1; ++c) {
                    mean += filtered(r, c);
                    const double mag = std::hypot(gx(r, c), gy(r, c));
                    mag_mean += mag;
                    if (mag > 0.0) {
                        double angle = std::atan2(gy(r, c), gx(r, c));  // [-pi, pi]
                        if (angle < 0.0) angle += 3.14159265358979323846;  // fold
                        int bin = static_cast<int>(angle / (3.14159265358979323846 / 4.0));
                        if (bin > 3) bin = 3;
                        hist[bin] += mag;
                    }
                }
            out[idx++] = mean / count;
            out[idx++] = mag_mean / count;
            const double hsum = hist[0] + hist[1] + hist[2] + hist[3];
            for (int b = 0; b < 4; ++b) out[idx++] = hsum > 0.0 ? hist[b] / hsum : 0.0;
        }
    return out;
}

PcaProjector pca_fit(const Eigen::MatrixXd& features, int B) {
    const Eigen::Index n = features.rows();
    const Eigen::Index d = features.cols();
    if (B < 1) throw std::invalid_argument("pca_fit: B must be >= 1");
    if (n < B + 1) {
        std::ostringstream msg;
        msg << "pca_fit: need at least " << B + 1 << " samples, got " << n;
        throw std::invalid_argument(msg.str());
    }
    if (d < B) {
        std::ostringstream msg;
        msg << "pca_fit: feature dim " << d << " < B = " << B;
        throw std::invalid_argument(msg.str());
    }
    const Eigen::VectorXd mean = features.colwise().mean();
    const Eigen::MatrixXd centered = features.rowwise() - mean.transpose();
    const Eigen::MatrixXd cov =
        (centered.transpose() * centered) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("pca_fit: eigendecomposition failed");

    // eigenvalues ascending; count numerically nonzero ones
    const Eigen::VectorXd evals = es.eigenvalues();
    const double lambda_max = std::max(evals[d - 1], 0.0);
    int rank = 0;
    for (Eigen::Index i = 0; i < d; ++i)
        if (evals[i] > 1e-12 * std::max(lambda_max, 1e-300)) ++rank;
    if (rank < B) {
        std::ostringstream msg;
        msg << "pca_fit: covariance rank " << rank << " below requested B = " << B;
        throw std::invalid_argument(msg.str());
    }

    PcaProjector p;
    p.mean_ = mean;
    p.basis_.resize(d, B);
    p.eigenvalues_.resize(B);
    for (int j = 0; j < B; ++j) {
        Eigen::VectorXd v = es.eigenvectors().col(d - 1 - j);
        // sign convention: largest-magnitude coordinate nonnegative
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0.0) v = -v;
        p.basis_.col(j) = v;
        p.eigenvalues_[j] = evals[d - 1 - j];
    }
    return p;
}

Eigen::VectorXd PcaProjector::project(const Eigen::VectorXd& x) const {
    if (x.size() != input_dim())
        throw std::invalid_argument("PcaProjector::project: dimension mismatch");
    return basis_.transpose() * (x - mean_);
}

Eigen::VectorXd PcaProjector::reconstruct(const Eigen::VectorXd& y) const {
    if (y.size() != components())
        throw std::invalid_argument("PcaProjector::reconstruct: dimension mismatch");
    return mean_ + basis_ * y;
}

void PcaProjector::save(const std::string& path) const {
    nlohmann::json header;
    header["format"] = "bridgekit-pca-v1";
    header["input_dim"] = input_dim();
    header["components"] = components();
    header["dtype"] = "float32-le";
    std::string blob;
    auto push = [&blob](const double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const float f = static_cast<float>(data[i]);
            blob.append(reinterpret_cast<const char*>(&f), 4);
        }
    };
    push(mean_.data(), mean_.size());
    push(basis_.data(), basis_.size());
    push(eigenvalues_.data(), eigenvalues_.size());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("PcaProjector::save: cannot open " + path);
    f << header.dump() << '\n';
    f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
}

PcaProjector PcaProjector::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("PcaProjector::load: cannot open " + path);
    std::string header_line;
    std::getline(f, header_line);
    nlohmann::json header = nlohmann::json::parse(header_line);
    if (header.value("format", "") != "bridgekit-pca-v1")
        throw std::runtime_error("PcaProjector::load: unrecognized format");
    const Eigen::Index d = header.at("input_dim").get<Eigen::Index>();
    const Eigen::Index B = header.at("components").get<Eigen::Index>();
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    const std::size_t need = 4ull * (d + d * B + B);
    if (blob.size() < need) throw std::runtime_error("PcaProjector::load: truncated data");
    PcaProjector p;
    p.mean_.resize(d);
    p.basis_.resize(d, B);
    p.eigenvalues_.resize(B);
    const char* ptr = blob.data();
    auto pull = [&ptr](double* data, Eigen::Index n) {
        for (Eigen::Index i = 0; i < n; ++i) {
            float v;
            std::memcpy(&v, ptr, 4);
            ptr += 4;
            data[i] = static_cast<double>(v);
        }
    };
    pull(p.mean_.data(), d);
    pull(p.basis_.data(), d * B);
    pull(p.eigenvalues_.data(), B);
    return p;
}

Eigen::VectorXd channel_average(const Eigen::VectorXd& v, int groups) {
    if (groups < 1) throw std::invalid_argument("channel_average: groups must be >= 1");
    if (v.size() % groups != 0)
        throw std::invalid_argument("channel_average: group count must divide channels");
    const Eigen::Index per = v.size() / groups;
    Eigen::VectorXd out(groups);
    for (int g = 0; g < groups; ++g)
        out[g] = v.segment(g * per, per).mean();
    return out;
}

Eigen::VectorXd build_endpoint(const Eigen::VectorXd& features, const PcaProjector& projector,
                               const EndpointSpec& spec, Rng& rng) {
    if (spec.b < 0.0) throw std::invalid_argument("build_endpoint: b must be nonnegative");
    Eigen::VectorXd z = projector.project(features);
    if (spec.pooling == Pooling::ChannelAverage) z = channel_average(z, spec.pool_groups);
    if (spec.b > 0.0) z += spec.b * rng.normal_vector(z.size());
    return z;
}

}  // namespace bridgekit
