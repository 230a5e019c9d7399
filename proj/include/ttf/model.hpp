#pragma once

#include "ttf/covariates.hpp"
#include "ttf/matrix.hpp"
#include "ttf/preprocess.hpp"
#include "ttf/trapezoid.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ttf {

enum class BackboneKind { linear, dlinear, mixer };
enum class Activation { gelu, relu, tanh, identity };

std::string_view to_string(BackboneKind kind);
std::string_view to_string(Activation activation);
BackboneKind parse_backbone_kind(std::string_view name); // throws unknown_backbone
Activation parse_activation(std::string_view name);      // throws invalid_config

double activate(Activation a, double x);
double activate_derivative(Activation a, double x);

struct BackboneHparams {
    int hidden = 32;               // mixer feature-MLP width
    int blocks = 2;                // mixer block count
    double dropout = 0.1;          // also used by the fusion head
    Activation activation = Activation::gelu;
    int decomposition_kernel = 7;  // dlinear trend window

    bool operator==(const BackboneHparams&) const = default;
};

struct ModelConfig {
    WindowSpec spec{};
    std::vector<int> scales{1, 3, 7, 14}; // one tower per entry, scales[0] == 1
    BackboneKind backbone = BackboneKind::mixer;
    BackboneHparams hparams{};
    int static_width = 0;  // C_sta
    int dynamic_width = 0; // C_dyn
    std::vector<std::string> static_channels; // one-hot vocabulary, size static_width when set
    int fusion_hidden = 0; // 0 selects n
    bool positional_encoding = true;
    std::uint64_t seed = 0;

    int tower_count() const { return static_cast<int>(scales.size()); }
    int effective_fusion_hidden() const { return fusion_hidden > 0 ? fusion_hidden : spec.n; }
    void validate() const; // throws invalid_config / unknown_backbone

    bool operator==(const ModelConfig&) const = default;
};

struct Tensor {
    std::string name;
    Matrix value;
};

// PE[pos, 2i] = sin(pos / 10000^(2i/dim)), PE[pos, 2i+1] = cos(same angle).
Matrix positional_encoding(int length, int dim);

struct ForwardOptions {
    bool training = false;
    std::uint64_t dropout_seed = 0;
};

struct MixerBlockTrace {
    Matrix input, time_pre, time_mask, mid, feat_pre, feat_act, feat_mask;
};

struct TowerTrace {
    Matrix backbone_input; // l x (k + C_dyn)
    Matrix trend;          // dlinear only
    std::vector<MixerBlockTrace> blocks;
    Matrix mixer_output;   // l x (k + C_dyn)
    Matrix backbone_output; // n x (k + C_dyn), before covariate readout
    Matrix output;          // n x k, before positional encoding
};

struct ForwardTrace {
    std::vector<TowerTrace> towers;
    Vector static_cov;
    Matrix dyn_future;
    Matrix fused_input;  // ((d+1) n) x k
    Matrix fusion_pre;   // hidden x k
    Matrix fusion_act;   // after activation and dropout
    Matrix fusion_mask;
    Matrix output;       // n x k, scaled space
};

// Multi-tower network: robust scale, per-tower moving average and backbone,
// positional encoding, time-axis concatenation, FFN fusion, inverse scale.
// Tower parameters are independent; all tensors live in one flat list
// (towers in order, then the fusion head) so optimizers and serializers can
// walk them uniformly.
class MtFusionNet {
public:
    explicit MtFusionNet(ModelConfig config); // seeded fan-in uniform initialization
    MtFusionNet(ModelConfig config, std::vector<Tensor> parameters); // validated against the layout

    const ModelConfig& config() const { return config_; }
    int tower_count() const { return config_.tower_count(); }

    std::vector<Tensor>& parameters() { return params_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    std::size_t parameter_count() const;
    // [begin, end) index range of tower q's tensors in parameters()
    std::pair<std::size_t, std::size_t> tower_tensor_range(int q) const;

    // Prediction in original units.
    Matrix forward(const TrapezoidWindow& window, const CovariateBundle& cov, bool training_mode,
                   std::uint64_t dropout_seed = 0) const;

    // Scaled-space forward from an already robust-scaled l x k input.
    Matrix forward_scaled(const Matrix& scaled_input, const CovariateBundle& cov, const ForwardOptions& options,
                          ForwardTrace* trace = nullptr) const;

    // Accumulates d(loss)/d(param) into grads (same order and shapes as parameters()).
    void backward(const ForwardTrace& trace, const Matrix& grad_output, std::vector<Matrix>& grads) const;

    // Backbone plus covariate injection for one tower: l x k smoothed input -> n x k.
    Matrix tower_forward(int q, const Matrix& smoothed_input, const CovariateBundle& cov,
                         const ForwardOptions& options, TowerTrace* trace = nullptr) const;

    std::vector<Matrix> zero_gradients() const;

private:
    void build_layout();
    void check_shapes(const Matrix& scaled_input, const CovariateBundle& cov) const;
    void tower_backward(int q, const TowerTrace& trace, const Vector& static_cov, const Matrix& dyn_future,
                        const Matrix& grad_tower_output, std::vector<Matrix>& grads) const;

    const Matrix& p(std::size_t index) const { return params_[index].value; }

    ModelConfig config_;
    std::vector<Tensor> params_;
    std::vector<std::size_t> tower_begin_; // size tower_count + 1; last = fusion start
};

// Robust-scales the window input over each column's valid region.
ScaledWindow scale_window_input(const TrapezoidWindow& window);

} // namespace ttf
