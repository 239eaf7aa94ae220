#ifndef BRIDGEKIT_ENCODER_HPP
#define BRIDGEKIT_ENCODER_HPP

#include <string>

#include <Eigen/Core>

#include "bridgekit/rng.hpp"

namespace bridgekit {

using Image = Eigen::MatrixXd;

// Center-surround weighted difference-of-Gaussians band-pass filter. Each
// iteration widens the surround: sigma_s(i) = sigma_c * (1 + 2i) for the
// i-th iteration, so sigma_s = 3 sigma_c after the first. Kernels are
// truncated at 4 sigma and renormalized to unit sum; with w_s = 1 the
// response to a constant image is identically zero.
struct RetinaFilter {
    double sigma_c = 1.0;
    double w_s = 1.0;
    int iterations = 2;

    double sigma_s(int iteration) const { return sigma_c * (1.0 + 2.0 * iteration); }
};

// Unit-sum 1D Gaussian taps truncated at 4 sigma.
Eigen::VectorXd gaussian_kernel(double sigma);

// Separable Gaussian blur with replicate borders (preserves constants).
Image gaussian_blur(const Image& img, double sigma);

// Band-pass response after filter.iterations center-surround passes.
// Throws when the image is smaller than the widest kernel support.
Image retina_apply(const RetinaFilter& filter, const Image& image);

// Per-patch local statistics of the retina-filtered image: for each cell of a
// grid_n x grid_n patch grid, [mean, mean gradient magnitude, 4-bin gradient
// orientation histogram] -> 6 numbers per patch, concatenated row-major.
Eigen::VectorXd patch_features(const RetinaFilter& filter, const Image& image, int grid_n);

// Top-B principal components of a feature cloud, via eigendecomposition of
// the sample covariance. Components are orthonormal and sign-fixed so each
// one's largest-magnitude coordinate is nonnegative.
class PcaProjector {
  public:
    PcaProjector() = default;

    Eigen::Index input_dim() const { return mean_.size(); }
    Eigen::Index components() const { return basis_.cols(); }
    const Eigen::MatrixXd& basis() const { return basis_; }     // d x B, columns
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::VectorXd& explained_variance() const { return eigenvalues_; }

    Eigen::VectorXd project(const Eigen::VectorXd& x) const;      // -> B
    Eigen::VectorXd reconstruct(const Eigen::VectorXd& y) const;  // -> d

    void save(const std::string& path) const;
    static PcaProjector load(const std::string& path);

    friend PcaProjector pca_fit(const Eigen::MatrixXd& features, int B);

  private:
    Eigen::MatrixXd basis_;
    Eigen::VectorXd mean_;
    Eigen::VectorXd eigenvalues_;
};

// Fits the projector on rows-as-samples features. Requires at least B+1
// samples, feature dim >= B, and sample covariance rank >= B (the error
// message reports the achieved rank).
PcaProjector pca_fit(const Eigen::MatrixXd& features, int B);

enum class Pooling { None, ChannelAverage };

// Endpoint construction: z_T ~ N(pool(P(features)), b^2 I). b = 0 is the
// deterministic endpoint.
struct EndpointSpec {
    double b = 0.0;
    Pooling pooling = Pooling::None;
    int pool_groups = 4;  // ChannelAverage: number of output channels
};

Eigen::VectorXd channel_average(const Eigen::VectorXd& v, int groups);

Eigen::VectorXd build_endpoint(const Eigen::VectorXd& features, const PcaProjector& projector,
                               const EndpointSpec& spec, Rng& rng);

}  // namespace bridgekit

#endif
