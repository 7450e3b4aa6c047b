#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "neurovm/engine.hpp"
#include "neurovm/errors.hpp"
#include "neurovm/sim_time.hpp"

namespace neurovm::snn {

template <typename Scalar>
struct LifParams {
  Scalar v_thresh = Scalar(1);
  Scalar v_reset = Scalar(0);
  Scalar leak = Scalar(0.9);
  SimTime dt = SimTime::us(1);

  void validate() const {
    if (!(v_reset < v_thresh)) throw InvalidConfig("LIF v_reset must be below v_thresh");
    if (!(leak > Scalar(0) && leak <= Scalar(1))) throw InvalidConfig("LIF leak must lie in (0,1]");
    if (dt.count() <= 0) throw InvalidConfig("LIF dt must be positive");
  }
};

/// Membrane potentials of one core plus its dense input-to-neuron weights.
/// `weights(i, j)` is the weight from input line i onto neuron j.
template <typename Scalar>
struct CoreState {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector potentials;
  Matrix weights;

  CoreState() = default;
  CoreState(Eigen::Index inputs, Eigen::Index neurons)
      : potentials(Vector::Zero(neurons)), weights(Matrix::Zero(inputs, neurons)) {}

  Eigen::Index inputs() const { return weights.rows(); }
  Eigen::Index neurons() const { return potentials.size(); }
};

/// Spiking ids are kept sorted and unique.
struct SpikeBatch {
  std::uint64_t step_index = 0;
  std::vector<std::uint32_t> ids;

  bool operator==(const SpikeBatch&) const = default;
};

/// One synchronous leaky integrate-and-fire update. Returns the neurons that fired.
template <typename Scalar>
SpikeBatch step_core(CoreState<Scalar>& state, const SpikeBatch& input,
                     const LifParams<Scalar>& params) {
  if (state.weights.cols() != state.potentials.size()) {
    throw DimensionMismatch("weight matrix has " + std::to_string(state.weights.cols()) +
                            " columns for " + std::to_string(state.potentials.size()) +
                            " neurons");
  }
  for (std::uint32_t id : input.ids) {
    if (id >= state.weights.rows()) {
      throw DimensionMismatch("input spike id " + std::to_string(id) + " outside " +
                              std::to_string(state.weights.rows()) + " input lines");
    }
  }

  state.potentials *= params.leak;
  for (std::uint32_t id : input.ids) {
    state.potentials += state.weights.row(id).transpose();
  }

  SpikeBatch out{input.step_index, {}};
  for (Eigen::Index j = 0; j < state.potentials.size(); ++j) {
    if (state.potentials[j] >= params.v_thresh) {
      out.ids.push_back(static_cast<std::uint32_t>(j));
      state.potentials[j] = params.v_reset;
    }
  }
  return out;
}

/// Uniform weights in [-0.5, 0.5) drawn row-major from `rng`.
template <typename Scalar>
typename CoreState<Scalar>::Matrix random_weights(Eigen::Index inputs, Eigen::Index neurons,
                                                  RandomStream& rng) {
  typename CoreState<Scalar>::Matrix w(inputs, neurons);
  for (Eigen::Index i = 0; i < inputs; ++i) {
    for (Eigen::Index j = 0; j < neurons; ++j) w(i, j) = static_cast<Scalar>(rng.next() - 0.5);
  }
  return w;
}

struct TaskShape {
  std::uint64_t steps = 0;
  std::uint64_t input_rate = 0;
  std::uint64_t fan_in = 0;
};

/// Synaptic operations a task performs: steps x input spikes per step x fan-in.
constexpr std::uint64_t workload_cost(const TaskShape& shape) {
  return shape.steps * shape.input_rate * shape.fan_in;
}

struct WorkloadResult {
  std::uint64_t synaptic_ops = 0;
  std::uint64_t output_spikes = 0;
  std::uint64_t steps = 0;
};

/// Runs a synthetic workload on one core: every step, `input_rate` distinct
/// input lines spike onto `fan_in` neurons. Counted synaptic ops equal
/// workload_cost(shape).
template <typename Scalar>
WorkloadResult run_workload(const TaskShape& shape, const LifParams<Scalar>& params,
                            RandomStream& rng) {
  params.validate();
  const auto neurons = static_cast<Eigen::Index>(shape.fan_in);
  const auto lines = static_cast<Eigen::Index>(std::max(shape.fan_in, shape.input_rate));
  CoreState<Scalar> state(lines, neurons);
  state.weights = random_weights<Scalar>(lines, neurons, rng);

  std::vector<std::uint32_t> pool(static_cast<std::size_t>(lines));
  WorkloadResult result;
  SpikeBatch input;
  for (std::uint64_t s = 0; s < shape.steps; ++s) {
    // Partial Fisher-Yates picks input_rate distinct lines.
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::uint64_t k = 0; k < shape.input_rate; ++k) {
      const std::uint64_t pick = k + rng.next_below(pool.size() - k);
      std::swap(pool[k], pool[pick]);
    }
    input.step_index = s;
    input.ids.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(shape.input_rate));
    std::sort(input.ids.begin(), input.ids.end());

    const SpikeBatch out = step_core(state, input, params);
    result.synaptic_ops += input.ids.size() * static_cast<std::uint64_t>(neurons);
    result.output_spikes += out.ids.size();
    ++result.steps;
  }
  return result;
}

}  // namespace neurovm::snn
