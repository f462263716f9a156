#include "acgm/episode.hpp"

namespace acgm {

void EpisodeRecord::finalize(double gamma) {
  discounted_return = 0.0;
  reward_sum = 0.0;
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    discounted_return = it->reward + gamma * discounted_return;
    reward_sum += it->reward;
  }
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ArgumentError("replay buffer: capacity must be positive");
}

void ReplayBuffer::push(EpisodeRecord rec) {
  episodes_.push_back(std::move(rec));
  while (episodes_.size() > capacity_) episodes_.pop_front();
}

std::vector<const EpisodeRecord*> ReplayBuffer::sample(int batch, Rng& rng) const {
  if (batch < 1) throw ArgumentError("replay buffer: batch must be positive");
  if (episodes_.empty()) throw ArgumentError("replay buffer: empty");
  std::vector<const EpisodeRecord*> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i) {
    out.push_back(&episodes_[rng.uniform_int(static_cast<int>(episodes_.size()))]);
  }
  return out;
}

}  // namespace acgm
