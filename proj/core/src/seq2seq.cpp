#include "decipher/seq2seq.hpp"

#include <cmath>
#include <numeric>

#include "decipher/config.hpp"

namespace decipher {

TrainLog train_seq2seq(Seq2SeqModel& model, const std::vector<EncodedExample>& data,
                       const RunConfig& cfg, const EpochHook& hook) {
  if (data.empty()) throw ContractError("train_seq2seq: empty corpus");
  std::vector<TensorPtrT<float>> tensors;
  for (const auto& [name, p] : model.params()) tensors.push_back(p);
  AdamT<float> adam(tensors, static_cast<float>(cfg.lr));
  Rng order_rng(Rng::derive(cfg.seed, 0x6f72646572));
  const bool teacher = cfg.feeding == "teacher";

  TrainLog log;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    double total = 0.0;
    for (std::size_t i : order) {
      GraphT<float> graph;
      auto loss = seq2seq_example_loss(model, data[i], teacher);
      const double lv = loss->value[0];
      if (!std::isfinite(lv))
        throw DataError("train_seq2seq: loss diverged at epoch " + std::to_string(epoch));
      total += lv;
      graph.backward(loss);
      if (cfg.max_grad_norm > 0)
        clip_grad_norm(tensors, static_cast<float>(cfg.max_grad_norm));
      adam.step();
      adam.zero_grads();
    }
    const double mean = total / static_cast<double>(data.size());
    log.epoch_losses.push_back(mean);
    log.epochs_run = epoch + 1;
    if (hook && hook(epoch, mean)) break;
  }
  return log;
}

}  // namespace decipher
