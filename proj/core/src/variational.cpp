#include "decipher/variational.hpp"

#include <cmath>
#include <numeric>

#include "decipher/config.hpp"

namespace decipher {

VdTrainLog train_vd(VdModel& model, const std::vector<EncodedExample>& data,
                    const RunConfig& cfg, const EpochHook& hook) {
  if (data.empty()) throw ContractError("train_vd: empty corpus");
  std::vector<TensorPtrT<float>> tensors;
  for (const auto& [name, p] : model.params()) tensors.push_back(p);
  AdamT<float> adam(tensors, static_cast<float>(cfg.lr));
  Rng order_rng(Rng::derive(cfg.seed, 0x6f72646572));
  Rng noise_rng(Rng::derive(cfg.seed, 0x6e6f697365));
  const bool teacher = cfg.feeding == "teacher";
  const int z_dim = model.dims.latent;

  VdTrainLog log;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<float> noise(z_dim);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    order_rng.shuffle(order);
    const auto w = static_cast<float>(kl_weight(epoch, cfg.kl_warmup_epochs));
    double total = 0.0, total_rec = 0.0, total_kl = 0.0;
    for (std::size_t i : order) {
      for (auto& n : noise) n = static_cast<float>(noise_rng.normal());
      GraphT<float> graph;
      auto parts = vd_example_loss(model, data[i], teacher, noise);
      const double rec = parts.rec->value[0];
      const double kl = parts.kl->value[0];
      if (!std::isfinite(rec) || !std::isfinite(kl))
        throw DataError("train_vd: loss diverged at epoch " + std::to_string(epoch));
      total_rec += rec;
      total_kl += kl;
      total += rec + kl;
      auto loss = add(parts.rec, scale(parts.kl, w));
      graph.backward(loss);
      if (cfg.max_grad_norm > 0)
        clip_grad_norm(tensors, static_cast<float>(cfg.max_grad_norm));
      adam.step();
      adam.zero_grads();
    }
    const auto n = static_cast<double>(data.size());
    log.epoch_losses.push_back(total / n);
    log.epoch_rec.push_back(total_rec / n);
    log.epoch_kl.push_back(total_kl / n);
    log.epochs_run = epoch + 1;
    if (hook && hook(epoch, total / n)) break;
  }
  return log;
}

}  // namespace decipher
