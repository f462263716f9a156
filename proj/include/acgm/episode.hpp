#pragma once

#include "acgm/common.hpp"
#include "acgm/graphgen.hpp"

#include <deque>
#include <vector>

namespace acgm {

struct EpisodeStep {
  std::vector<Vector> obs;        // observations the step was taken from
  std::vector<int> last_actions;  // previous joint action (-1 on the first step)
  GeneratorOutput gen;            // graph emitted for this step
  std::vector<int> actions;       // joint action taken
  double reward = 0.0;
  bool done = false;
};

struct EpisodeRecord {
  std::vector<EpisodeStep> steps;
  std::vector<Vector> final_obs;  // observations after the last step
  Matrix final_dag;               // graph for the state past the end; only
  std::vector<int> final_order;   // consulted when the episode was truncated
  double discounted_return = 0.0;
  double reward_sum = 0.0;

  // Fills the return fields from the recorded rewards.
  void finalize(double gamma);
};

// Ring buffer of whole episodes, FIFO eviction, uniform sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(EpisodeRecord rec);
  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }

  const EpisodeRecord& at(std::size_t i) const { return episodes_.at(i); }
  std::vector<const EpisodeRecord*> sample(int batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::deque<EpisodeRecord> episodes_;
};

}  // namespace acgm
