#include "lyapmarl/replay.hpp"

#include <stdexcept>

namespace lyapmarl {

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  }
  records_.reserve(capacity);
}

void ReplayBuffer::add(TransitionRecord record) {
  if (size_ < capacity_) {
    records_.push_back(std::move(record));
    ++size_;
  } else {
    records_[next_] = std::move(record);
  }
  next_ = (next_ + 1) % capacity_;
}

const TransitionRecord& ReplayBuffer::at(size_t slot) const {
  if (slot >= size_) {
    throw std::out_of_range("ReplayBuffer: slot out of range");
  }
  return records_[slot];
}

size_t ReplayBuffer::sample_index(Rng& rng) const {
  if (size_ == 0) {
    throw std::logic_error("ReplayBuffer: cannot sample from an empty buffer");
  }
  return static_cast<size_t>(rng.integer(size_));
}

double ReplayBuffer::lookahead_cost_sum(size_t slot, int horizon) const {
  const TransitionRecord& base = at(slot);
  double total = base.cost;
  for (int k = 1; k <= horizon; ++k) {
    const size_t pos = (slot + static_cast<size_t>(k)) % capacity_;
    if (pos >= size_) {
      break;  // slot never written yet
    }
    const TransitionRecord& rec = records_[pos];
    // A successor must continue this episode step by step. Overwritten
    // tails and foreign episodes fail one of these checks.
    if (rec.episode_id != base.episode_id ||
        rec.step_idx != base.step_idx + k) {
      break;
    }
    total += rec.cost;
  }
  return total;
}

}  // namespace lyapmarl
