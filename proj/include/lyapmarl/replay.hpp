#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "lyapmarl/rng.hpp"

namespace lyapmarl {

// One environment transition as stored for off-policy training. The global
// state is kept both flattened (critic input) and as the per-agent
// observation vectors (actor inputs). cost is the Lyapunov cost signal of
// the successor state.
struct TransitionRecord {
  Eigen::VectorXd s_flat;
  std::vector<Eigen::VectorXd> s_obs;
  Eigen::VectorXd a;  // joint action, 2 entries per agent
  double r = 0.0;
  Eigen::VectorXd s_next_flat;
  std::vector<Eigen::VectorXd> s_next_obs;
  bool done = false;
  long long episode_id = 0;
  int step_idx = 0;
  double cost = 0.0;
};

// Ring buffer over transitions. Because episodes are appended contiguously,
// a forward scan from any slot can recover the truncated cost tail of that
// record's episode; episode_id and step_idx checks keep the scan from
// leaking across boundaries or into slots overwritten by newer data.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(size_t capacity);

  void add(TransitionRecord record);

  size_t size() const { return size_; }
  size_t capacity() const { return capacity_; }

  const TransitionRecord& at(size_t slot) const;

  // Uniform random slot index over the stored records.
  size_t sample_index(Rng& rng) const;

  // Sum of the costs of this record and its up-to-T in-episode successors:
  // the regression target for the Lyapunov critic.
  double lookahead_cost_sum(size_t slot, int horizon) const;

 private:
  std::vector<TransitionRecord> records_;
  size_t capacity_;
  size_t next_ = 0;
  size_t size_ = 0;
};

}  // namespace lyapmarl
