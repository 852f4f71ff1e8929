#include "fadersynth/training.h"

#include <ATen/Context.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fadersynth/checkpoint.h"
#include "fadersynth/errors.h"
#include "fadersynth/log.h"

namespace fadersynth {
namespace fs = std::filesystem;

std::pair<double, double> Warmup(long step, const TrainConfig& cfg) {
  if (step < 0) throw ConfigError("warmup step must be >= 0");
  return {cfg.beta_ramp().At(step), cfg.lambda_ramp().At(step)};
}

std::string LossReport::CsvHeader() {
  return "step,stage,recon,kl,fader_dis,fader_enc,hinge_d,hinge_g,feature_match,beta,lambda,"
         "fader_accuracy";
}

std::string LossReport::CsvRow() const {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%ld,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", step,
                stage, recon, kl, fader_dis, fader_enc, hinge_d, hinge_g, feature_match, beta, lambda,
                fader_accuracy);
  return buf;
}

void FitDescriptorStatistics(FaderModel& model, const std::vector<AudioBuffer>& chunks,
                             double silence_threshold) {
  if (chunks.empty()) throw LengthError("no training chunks to fit descriptor statistics on");
  std::vector<AttributeTrack> tracks;
  tracks.reserve(chunks.size());
  for (const auto& c : chunks) {
    tracks.push_back(ResampleAttributes(model.Describe(c), model.LatentLength(c.size())));
  }
  auto normalizer = AttributeNormalizer::Fit(tracks);
  auto quantizer = Quantizer::Fit(tracks, model.config().num_bins, silence_threshold);
  model.SetDescriptorStatistics(std::move(quantizer), std::move(normalizer));
}

Batch MakeBatch(const FaderModel& model, const std::vector<AudioBuffer>& chunks) {
  if (chunks.empty()) throw LengthError("empty batch");
  const int m = model.LatentLength(chunks.front().size());
  const long b = static_cast<long>(chunks.size());
  const long kinds = model.config().num_kinds();
  Batch out;
  out.audio = AudioBatchToTensor(chunks);
  out.attrs = torch::empty({b, kinds, m}, torch::kFloat32);
  out.labels = torch::empty({b, kinds, m}, torch::kInt64);
  out.mask = torch::empty({b, m}, torch::kBool);
  auto labels = out.labels.accessor<int64_t, 3>();
  auto mask = out.mask.accessor<bool, 2>();
  for (long i = 0; i < b; ++i) {
    const AttributeTrack track = ResampleAttributes(model.Describe(chunks[i]), m);
    out.attrs[i] = MatrixToTensor(model.normalizer().Normalize(track));
    const auto q = model.quantizer().Quantize(track);
    for (int t = 0; t < m; ++t) {
      mask[i][t] = !q.silence_mask[t];
      for (long k = 0; k < kinds; ++k) labels[i][k][t] = q.silence_mask[t] ? -1 : q.labels(k, t);
    }
  }
  return out;
}

std::shared_ptr<FaderModel> CreateModel(const ModelConfig& cfg, std::uint64_t seed) {
  torch::manual_seed(seed);
  return std::make_shared<FaderModel>(cfg);
}

std::uint64_t ParameterHash(const torch::nn::Module& module) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const torch::Tensor& t) {
    const torch::Tensor c = t.detach().contiguous().to(torch::kCPU);
    const auto* bytes = static_cast<const std::uint8_t*>(c.data_ptr());
    const std::size_t n = static_cast<std::size_t>(c.numel()) * c.element_size();
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : module.named_parameters(true)) mix(p.value());
  for (const auto& b : module.named_buffers(true)) mix(b.value());
  return h;
}

PreparedData PrepareData(const TrainConfig& cfg) {
  PreparedData d;
  const ChunkPolicy policy{static_cast<std::size_t>(cfg.chunk_length), cfg.chunk_overlap};
  if (cfg.corpus.empty()) {
    d.corpus = MakeToyCorpus(cfg.toy_items, cfg.sample_rate, cfg.toy_seed, policy);
  } else {
    d.corpus = LoadCorpus(cfg.corpus, cfg.sample_rate, policy, cfg.seed);
  }
  d.train = d.corpus.Chunks(Split::kTrain);
  d.valid = d.corpus.Chunks(Split::kValid);
  d.test = d.corpus.Chunks(Split::kTest);
  if (d.train.empty()) throw LengthError("the training split is empty");
  return d;
}

namespace {

torch::optim::AdamOptions AdamFor(const TrainConfig& cfg) {
  return torch::optim::AdamOptions(cfg.learning_rate).betas({cfg.adam_beta1, cfg.adam_beta2});
}

template <typename... Lists>
std::vector<torch::Tensor> Concat(const Lists&... lists) {
  std::vector<torch::Tensor> out;
  (out.insert(out.end(), lists.begin(), lists.end()), ...);
  return out;
}

double Accuracy(const std::vector<torch::Tensor>& logits, const torch::Tensor& labels,
                const torch::Tensor& mask) {
  const double frames = mask.sum().item<double>();
  if (frames == 0.0) return 0.0;
  double correct = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const torch::Tensor hit = logits[i].argmax(1).eq(labels.select(1, static_cast<long>(i))) & mask;
    correct += hit.sum().item<double>();
  }
  return correct / (frames * static_cast<double>(logits.size()));
}

bool HasGradient(const std::vector<torch::Tensor>& params) {
  for (const auto& p : params) {
    if (p.grad().defined() && p.grad().abs().sum().item<double>() != 0.0) return true;
  }
  return false;
}

}  // namespace

Trainer::Trainer(TrainConfig cfg, std::shared_ptr<FaderModel> model, std::vector<AudioBuffer> train_chunks)
    : cfg_(std::move(cfg)), model_(std::move(model)), chunks_(std::move(train_chunks)), rng_(cfg_.seed) {
  cfg_.Validate();
  if (!model_->has_statistics()) throw ConfigError("fit descriptor statistics before training");
  if (chunks_.empty()) throw LengthError("no training chunks");
  generator_opt_ = std::make_unique<torch::optim::Adam>(
      Concat(model_->EncoderParameters(), model_->DecoderParameters()), AdamFor(cfg_));
  latent_opt_ = std::make_unique<torch::optim::Adam>(model_->LatentDiscriminatorParameters(), AdamFor(cfg_));
}

void Trainer::EnterStage2() {
  // Stale stage-1 gradients would otherwise trip the frozen-parameter check.
  for (auto& p : model_->EncoderParameters()) {
    p.mutable_grad().reset();
    p.set_requires_grad(false);
  }
  for (auto& p : model_->LatentDiscriminatorParameters()) {
    p.mutable_grad().reset();
    p.set_requires_grad(false);
  }
  decoder_opt_ = std::make_unique<torch::optim::Adam>(model_->DecoderParameters(), AdamFor(cfg_));
  wave_opt_ = std::make_unique<torch::optim::Adam>(model_->waveform_discriminator()->parameters(),
                                                   AdamFor(cfg_));
}

Batch Trainer::NextBatch() {
  std::uniform_int_distribution<std::size_t> pick(0, chunks_.size() - 1);
  std::vector<AudioBuffer> items;
  items.reserve(static_cast<std::size_t>(cfg_.batch_size));
  for (int i = 0; i < cfg_.batch_size; ++i) items.push_back(chunks_[pick(rng_)]);
  return MakeBatch(*model_, items);
}

LossReport Trainer::Stage1Step(const Batch& batch) {
  FaderModel& m = *model_;
  m.SetTraining(true);
  const auto [beta, lambda] = Warmup(step_, cfg_);
  LossReport r;
  r.step = step_;
  r.stage = 1;
  r.beta = beta;
  r.lambda = lambda;

  const LatentTrajectory z = m.Encode(batch.audio, /*deterministic=*/false);

  // Fader discriminator on the detached latent.
  const auto dis_logits = m.DiscriminateLatent(z.sample.detach());
  const FaderLoss dis = LossFader(dis_logits, batch.labels, batch.mask);
  if (dis.active_frames > 0) {
    latent_opt_->zero_grad();
    dis.discriminator.backward();
    latent_opt_->step();
  }
  r.fader_dis = dis.discriminator.item<double>();
  r.fader_accuracy = Accuracy(dis_logits, batch.labels, batch.mask);

  // Encoder and decoder: ELBO plus confusion of the updated discriminator.
  const torch::Tensor x_hat = m.Decode(z.sample, batch.attrs);
  const VaeLoss vae = LossVae(batch.audio, x_hat, z, beta);
  const FaderLoss enc = LossFader(m.DiscriminateLatent(z.sample), batch.labels, batch.mask);
  CheckFinite(enc.encoder, "fader encoder loss");
  const torch::Tensor total = vae.total + lambda * enc.encoder;
  generator_opt_->zero_grad();
  total.backward();
  generator_opt_->step();
  // Gradients that reached the discriminators through the encoder term are
  // discarded; zero_grad runs before their next update.

  r.recon = vae.recon.item<double>();
  r.kl = vae.kl.item<double>();
  r.fader_enc = enc.encoder.item<double>();
  return r;
}

LossReport Trainer::Stage2Step(const Batch& batch) {
  FaderModel& m = *model_;
  if (!decoder_opt_) EnterStage2();
  m.SetTraining(true);
  m.encoder()->eval();
  for (auto d : m.latent_discriminators()) d->eval();
  const auto [beta, lambda] = Warmup(step_, cfg_);
  LossReport r;
  r.step = step_;
  r.stage = 2;
  r.beta = beta;
  r.lambda = lambda;

  LatentTrajectory z;
  {
    torch::NoGradGuard no_grad;
    z = m.Encode(batch.audio, /*deterministic=*/false);
  }
  const torch::Tensor x_hat = m.Decode(z.sample, batch.attrs);

  // Waveform discriminator.
  const auto real = m.DiscriminateWaveform(batch.audio);
  const auto fake_detached = m.DiscriminateWaveform(x_hat.detach());
  const HingeLoss d_loss = LossHinge(real.scores, fake_detached.scores);
  CheckFinite(d_loss.discriminator, "hinge discriminator loss");
  wave_opt_->zero_grad();
  d_loss.discriminator.backward();
  wave_opt_->step();
  r.hinge_d = d_loss.discriminator.item<double>();

  // Decoder: L_vae + L_g + L_FM against the updated discriminator.
  const VaeLoss vae = LossVae(batch.audio, x_hat, z, beta);
  const auto fake = m.DiscriminateWaveform(x_hat);
  std::vector<std::vector<torch::Tensor>> real_maps;
  {
    torch::NoGradGuard no_grad;
    real_maps = m.DiscriminateWaveform(batch.audio).feature_maps;
  }
  const HingeLoss g_loss = LossHinge(real.scores, fake.scores);
  const torch::Tensor fm = LossFeatureMatching(real_maps, fake.feature_maps);
  const torch::Tensor total = vae.total + g_loss.generator + fm;
  CheckFinite(total, "stage 2 generator loss");
  decoder_opt_->zero_grad();
  total.backward();
  if (HasGradient(m.EncoderParameters()) || HasGradient(m.LatentDiscriminatorParameters())) {
    throw ContractViolation("a frozen encoder or latent discriminator parameter received a gradient");
  }
  decoder_opt_->step();

  r.recon = vae.recon.item<double>();
  r.kl = vae.kl.item<double>();
  r.hinge_g = g_loss.generator.item<double>();
  r.feature_match = fm.item<double>();
  return r;
}

LossReport Trainer::Step() {
  if (done()) throw ContractViolation("training already finished");
  const Batch batch = NextBatch();
  LossReport r = stage() == 1 ? Stage1Step(batch) : Stage2Step(batch);
  ++step_;
  return r;
}

void Trainer::Run(long last_step, const std::function<void(const LossReport&)>& on_step,
                  const std::string& metrics_csv) {
  std::ofstream csv;
  if (!metrics_csv.empty()) {
    const bool fresh = !fs::exists(metrics_csv) || fs::file_size(metrics_csv) == 0;
    csv.open(metrics_csv, std::ios::app);
    if (!csv) throw IoError("cannot open metrics file " + metrics_csv);
    if (fresh) csv << LossReport::CsvHeader() << '\n';
  }
  const long end = std::min(last_step, cfg_.stage1_steps + cfg_.stage2_steps);
  while (step_ < end) {
    LossReport r;
    try {
      r = Step();
    } catch (const NumericError&) {
      const fs::path dir(cfg_.checkpoint_dir);
      SaveCheckpoint((dir / "abort.ckpt").string());
      throw;
    }
    if (on_step) on_step(r);
    if (r.step % cfg_.log_interval == 0 || step_ == end) {
      if (csv.is_open()) csv << r.CsvRow() << std::endl;
      char msg[256];
      std::snprintf(msg, sizeof(msg), "step %ld stage %d recon %.4f kl %.3f fader %.3f/%.3f acc %.3f hinge %.3f/%.3f fm %.4f",
                    r.step, r.stage, r.recon, r.kl, r.fader_dis, r.fader_enc, r.fader_accuracy, r.hinge_d,
                    r.hinge_g, r.feature_match);
      LogInfo(msg);
    }
    if (step_ % cfg_.checkpoint_interval == 0) {
      char name[64];
      std::snprintf(name, sizeof(name), "step_%08ld.ckpt", step_);
      SaveCheckpoint((fs::path(cfg_.checkpoint_dir) / name).string());
    }
  }
}

void Trainer::SaveCheckpoint(const std::string& path) const {
  CheckpointMeta meta;
  meta.step = step_;
  meta.stage = stage();
  meta.seed = cfg_.seed;
  meta.train_config = DumpTrainConfig(cfg_);
  fadersynth::SaveCheckpoint(path, *model_, meta, [&](torch::serialize::OutputArchive& ar) {
    std::ostringstream rng_state;
    rng_state << rng_;
    ar.write("batch_rng", c10::IValue(rng_state.str()));
    auto gen = at::globalContext().defaultGenerator(c10::DeviceType::CPU);
    {
      std::lock_guard<std::mutex> lock(gen.mutex());
      ar.write("torch_rng", gen.get_state());
    }
    auto save_opt = [&](const char* key, const std::unique_ptr<torch::optim::Adam>& opt) {
      if (!opt) return;
      torch::serialize::OutputArchive sub;
      opt->save(sub);
      ar.write(key, sub);
    };
    save_opt("opt_generator", generator_opt_);
    save_opt("opt_latent", latent_opt_);
    save_opt("opt_decoder", decoder_opt_);
    save_opt("opt_waveform", wave_opt_);
  });
}

std::unique_ptr<Trainer> Trainer::Resume(const std::string& path, std::vector<AudioBuffer> train_chunks) {
  LoadedCheckpoint ck = LoadCheckpoint(path);
  if (ck.meta.train_config.empty()) throw IoError(path + " holds no training configuration");
  TrainConfig cfg = ParseTrainConfig(ck.meta.train_config);
  auto trainer = std::make_unique<Trainer>(cfg, ck.model, std::move(train_chunks));
  trainer->step_ = ck.meta.step;
  if (trainer->stage() == 2) trainer->EnterStage2();

  auto ar = OpenCheckpointArchive(path);
  c10::IValue rng_state;
  if (!ar.try_read("batch_rng", rng_state)) throw IoError(path + " holds no training state");
  std::istringstream(rng_state.toStringRef()) >> trainer->rng_;
  torch::Tensor torch_state;
  ar.read("torch_rng", torch_state);
  auto gen = at::globalContext().defaultGenerator(c10::DeviceType::CPU);
  {
    std::lock_guard<std::mutex> lock(gen.mutex());
    gen.set_state(torch_state);
  }
  auto load_opt = [&](const char* key, const std::unique_ptr<torch::optim::Adam>& opt) {
    if (!opt) return;
    torch::serialize::InputArchive sub;
    if (ar.try_read(key, sub)) opt->load(sub);
  };
  load_opt("opt_generator", trainer->generator_opt_);
  load_opt("opt_latent", trainer->latent_opt_);
  load_opt("opt_decoder", trainer->decoder_opt_);
  load_opt("opt_waveform", trainer->wave_opt_);
  return trainer;
}

TrainSummary Train(const TrainConfig& cfg, const std::string& resume_from,
                   const std::function<void(const LossReport&)>& on_step) {
  cfg.Validate();
  const fs::path dir(cfg.checkpoint_dir);
  fs::create_directories(dir);
  PreparedData data = PrepareData(cfg);
  LogInfo("training on " + std::to_string(data.train.size()) + " chunks of " +
          std::to_string(cfg.chunk_length) + " samples");

  std::unique_ptr<Trainer> trainer;
  if (!resume_from.empty()) {
    trainer = Trainer::Resume(resume_from, std::move(data.train));
    LogInfo("resumed from " + resume_from + " at step " + std::to_string(trainer->step()));
  } else {
    auto model = CreateModel(cfg.MakeModelConfig(), cfg.seed);
    FitDescriptorStatistics(*model, data.train, cfg.silence_threshold);
    trainer = std::make_unique<Trainer>(cfg, model, std::move(data.train));
  }
  {
    std::ofstream out(dir / "config.yaml");
    out << DumpTrainConfig(trainer->config());
  }
  trainer->model().quantizer().Save((dir / "quantizer.json").string());

  TrainSummary summary;
  summary.metrics_csv = (dir / "metrics.csv").string();
  trainer->Run(cfg.stage1_steps + cfg.stage2_steps, on_step, summary.metrics_csv);
  summary.final_checkpoint = (dir / "final.ckpt").string();
  trainer->SaveCheckpoint(summary.final_checkpoint);
  summary.steps = trainer->step();
  return summary;
}

}  // namespace fadersynth
