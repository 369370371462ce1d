#include "cabin/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "cabin/errors.hpp"

namespace cabin {

namespace {

constexpr double kEps = 1e-9;

// Stream identifiers for derive_seed.
enum Stream : std::uint64_t {
  kBackground = 1,
  kEstimate = 2,
  kFrames = 3,
  kExplore = 4,
};

double clamp_rate(const ScenarioConfig& cfg, double rate) {
  return std::clamp(rate, cfg.min_rate_kbps, cfg.max_rate_kbps);
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::cabin: return "cabin";
    case Strategy::ton: return "ton";
    case Strategy::don: return "don";
    case Strategy::explore: return "explore";
    case Strategy::fixed: return "fixed";
  }
  return "unknown";
}

Strategy parse_strategy(const std::string& name) {
  for (auto s : {Strategy::cabin, Strategy::ton, Strategy::don, Strategy::explore, Strategy::fixed})
    if (to_string(s) == name) return s;
  throw ConfigInvalid("unknown strategy '" + name + "'");
}

std::string to_string(FlowKind k) {
  switch (k) {
    case FlowKind::ftp: return "FTP";
    case FlowKind::cbr: return "CBR";
    case FlowKind::pareto: return "Pareto";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// ScenarioConfig

void ScenarioConfig::validate() const {
  auto fail = [](const std::string& why) { throw ConfigInvalid(why); };
  if (participants < 1) fail("participants must be >= 1");
  if (!(duration_s > 0.0)) fail("duration must be positive");
  if (!(tick_s > 0.0)) fail("tick must be positive");
  if (!(epoch_s > 0.0)) fail("epoch must be positive");
  const double per_epoch = epoch_s / tick_s;
  if (std::abs(per_epoch - std::round(per_epoch)) > 1e-6 || std::round(per_epoch) < 1.0)
    fail("tick must divide the adaptation epoch");
  if (!(min_rate_kbps > 0.0) || !(min_rate_kbps < max_rate_kbps))
    fail("rate bounds must satisfy 0 < min < max");
  if (!(base_capacity_kbps >= 0.0)) fail("capacity must be non-negative");
  if (!(bw_noise_frac >= 0.0 && bw_noise_frac < 1.0)) fail("bandwidth noise must be in [0, 1)");
  if (!(frame_rate_fps > 0.0)) fail("frame rate must be positive");
  if (!(startup_delay_s >= 0.0)) fail("startup delay must be non-negative");
  if (!(fixed_rate_kbps >= 0.0)) fail("fixed rate must be non-negative");
  if (!(initial_rate_kbps > 0.0)) fail("initial rate must be positive");
  if (!(rebuffer_target_ms > 0.0)) fail("rebuffer target must be positive");
  if (video_packet_bytes < 1) fail("video packet size must be positive");
  if (!(don.target_ms > 0.0) || !(don.gain > 0.0)) fail("DON constants must be positive");
  for (const auto& step : capacity_schedule)
    if (!(step.capacity_kbps >= 0.0)) fail("scheduled capacity must be non-negative");
}

double ScenarioConfig::capacity_at(double t) const {
  double cap = base_capacity_kbps;
  for (const auto& step : capacity_schedule)
    if (step.from_s <= t + kEps) cap = step.capacity_kbps;
  return cap;
}

long ScenarioConfig::ticks() const { return std::lround(duration_s / tick_s); }
long ScenarioConfig::ticks_per_epoch() const { return std::lround(epoch_s / tick_s); }
long ScenarioConfig::frame_slots() const { return std::lround(duration_s * frame_rate_fps); }

// ---------------------------------------------------------------------------
// Background traffic

bool BackgroundFlow::active_at(double t) const {
  if (t < start_s || t >= end_s) return false;
  if (kind != FlowKind::pareto) return true;
  auto it = std::upper_bound(on_periods.begin(), on_periods.end(), t,
                             [](double v, const auto& p) { return v < p.first; });
  if (it == on_periods.begin()) return false;
  --it;
  return t < it->second;
}

std::vector<BackgroundFlow> sample_path_background(const ScenarioConfig& cfg, int participant,
                                                   Rng& rng) {
  if (!cfg.background_traffic) return {};

  BackgroundFlow ftp;
  ftp.kind = FlowKind::ftp;
  ftp.participant = participant;
  ftp.start_s = rng.uniform(0.0, 100.0);
  ftp.duration_s = rng.uniform(0.0, 300.0);
  ftp.packet_bytes = 1500;
  ftp.data_kbit = rng.uniform(10.0, 1500.0) * 8.0;

  BackgroundFlow cbr;
  cbr.kind = FlowKind::cbr;
  cbr.participant = participant;
  cbr.start_s = rng.uniform(0.0, 50.0);
  cbr.duration_s = rng.uniform(50.0, 200.0);
  cbr.packet_bytes = 500;
  cbr.rate_kbps = rng.uniform(1000.0, 1500.0);
  cbr.data_kbit = rng.uniform(5.0, 50.0) * 8000.0;
  cbr.end_s = cbr.start_s + std::min(cbr.duration_s, cbr.data_kbit / cbr.rate_kbps);

  BackgroundFlow pareto;
  pareto.kind = FlowKind::pareto;
  pareto.participant = participant;
  pareto.start_s = rng.uniform(50.0, 150.0);
  pareto.duration_s = rng.uniform(200.0, 300.0);
  pareto.packet_bytes = 1000;
  pareto.rate_kbps = rng.uniform(500.0, 1000.0);
  pareto.end_s = pareto.start_s + pareto.duration_s;
  for (double t = pareto.start_s; t < pareto.end_s;) {
    const double on = rng.pareto(1.5, 1.0);
    const double off = rng.pareto(1.5, 1.0);
    pareto.on_periods.emplace_back(t, std::min(t + on, pareto.end_s));
    t += on + off;
  }

  // FTP drains its data at a fair share of what CBR and Pareto leave, the
  // video flow being the other sharer.
  const double deadline = ftp.start_s + ftp.duration_s;
  double remaining = ftp.data_kbit;
  double t = ftp.start_s;
  ftp.end_s = deadline;
  while (t < deadline) {
    double fixed = 0.0;
    if (cbr.active_at(t)) fixed += cbr.rate_kbps;
    if (pareto.active_at(t)) fixed += pareto.rate_kbps;
    const double share = 0.5 * std::max(0.0, cfg.capacity_at(t) - fixed);
    const double dt = std::min(cfg.tick_s, deadline - t);
    if (share * dt >= remaining) {
      ftp.end_s = t + remaining / share;
      break;
    }
    remaining -= share * dt;
    t += dt;
  }

  return {std::move(ftp), std::move(cbr), std::move(pareto)};
}

std::vector<BackgroundFlow> sample_background(const ScenarioConfig& cfg, std::uint64_t stream_seed) {
  std::vector<BackgroundFlow> flows;
  for (int p = 0; p < cfg.participants; ++p) {
    Rng rng(derive_seed(stream_seed, {kBackground, static_cast<std::uint64_t>(p)}));
    for (auto& f : sample_path_background(cfg, p, rng)) flows.push_back(std::move(f));
  }
  return flows;
}

PathSample step_path(const ScenarioConfig& cfg, const std::vector<BackgroundFlow>& flows,
                     double t, double video_rate_kbps) {
  const double cap = cfg.capacity_at(t);
  double fixed = 0.0;
  int ftp_active = 0;
  for (const auto& f : flows) {
    if (!f.active_at(t)) continue;
    if (f.kind == FlowKind::ftp)
      ++ftp_active;
    else
      fixed += f.rate_kbps;
  }
  const double residual = std::max(0.0, cap - fixed);
  const double ftp_share = residual * ftp_active / (ftp_active + 1.0);

  PathSample s;
  s.avail_bw_kbps = residual - ftp_share;
  s.background_kbps = std::min(cap, fixed) + ftp_share;
  s.delivered_kbps = std::min(video_rate_kbps, s.avail_bw_kbps);
  s.loss_frac = video_rate_kbps > 0.0
                    ? std::max(0.0, (video_rate_kbps - s.avail_bw_kbps) / video_rate_kbps)
                    : 0.0;
  const double util =
      cap > 0.0 ? std::min(1.0, (s.background_kbps + s.delivered_kbps) / cap) : 1.0;
  s.rtt_ms = cfg.rtt_base_ms + cfg.rtt_queue_ms * util;
  return s;
}

double estimate_bandwidth(double true_bw_kbps, Rng& rng, double noise_frac) {
  const double u = rng.uniform(-noise_frac, noise_frac);
  return true_bw_kbps * (1.0 + u);
}

double psnr_of_frame(const PsnrModel& m, double rate_kbps, bool lost, double prev_psnr_db) {
  if (lost) return std::max(m.floor_db, prev_psnr_db - m.conceal_drop_db);
  if (!(rate_kbps > 0.0)) return m.min_db;
  return std::clamp(m.beta0_db + m.beta1_db * std::log(rate_kbps / m.reference_kbps), m.min_db,
                    m.max_db);
}

int packets_per_frame(double rate_kbps, double fps, int packet_bytes) {
  const double bytes = rate_kbps * 1000.0 / 8.0 / fps;
  return std::max(1, static_cast<int>(std::ceil(bytes / packet_bytes - 1e-9)));
}

double frame_loss_prob(double packet_loss, int packets) {
  if (packet_loss <= 0.0) return 0.0;
  if (packet_loss >= 1.0) return 1.0;
  return 1.0 - std::pow(1.0 - packet_loss, packets);
}

// ---------------------------------------------------------------------------
// Controllers

double controller_ton(const ScenarioConfig& cfg, const std::vector<Feedback>& feedbacks) {
  if (feedbacks.empty()) throw ConfigInvalid("TON needs at least one participant");
  double sum = 0.0;
  for (const auto& fb : feedbacks) sum += fb.est_bw_kbps;
  return clamp_rate(cfg, sum / static_cast<double>(feedbacks.size()));
}

double controller_don(const ScenarioConfig& cfg, const std::vector<Feedback>& feedbacks,
                      double prev_rate_kbps) {
  if (feedbacks.empty()) throw ConfigInvalid("DON needs at least one participant");
  double min_buffer = std::numeric_limits<double>::infinity();
  for (const auto& fb : feedbacks) min_buffer = std::min(min_buffer, fb.buffer_ms);
  double factor = 1.0 + cfg.don.gain * (min_buffer - cfg.don.target_ms) / cfg.don.target_ms;
  if (min_buffer < cfg.don.low_ms) factor = std::min(factor, 1.0);
  return clamp_rate(cfg, prev_rate_kbps * factor);
}

CabinController::CabinController(const BayesianNetworkModel& model, const CabinPolicy& policy)
    : model_(model), policy_(policy) {
  int q = -1;
  int rate = -1;
  for (std::size_t i = 0; i < model.dag.nodes.size(); ++i) {
    if (model.dag.nodes[i].name == policy.qos_node) q = static_cast<int>(i);
    if (model.dag.nodes[i].name == policy.rate_node) rate = static_cast<int>(i);
  }
  if (q < 0 || model.dag.nodes[static_cast<std::size_t>(q)].role != NodeRole::qos_metric)
    throw UntrainedModel("model has no QoS node '" + policy.qos_node + "'");
  if (rate < 0 || model.schemes.count(policy.rate_node) == 0)
    throw UntrainedModel("model has no rate node '" + policy.rate_node + "'");
  const auto knobs = tunable_parents(model, policy.qos_node);
  rate_is_tunable_parent_ =
      std::find(knobs.begin(), knobs.end(), policy.rate_node) != knobs.end();
  preference_ = preference_by_value(model, policy.qos_node);
  rate_cardinality_ = model.dag.nodes[static_cast<std::size_t>(rate)].cardinality;
}

Evidence CabinController::evidence_for(const Feedback& fb) const {
  Evidence ev;
  for (const auto& name : policy_.evidence_nodes) {
    double value = 0.0;
    if (name == "est_bw_kbps")
      value = fb.est_bw_kbps;
    else if (name == "buffer_ms")
      value = fb.buffer_ms;
    else if (name == "loss_frac")
      value = fb.loss_frac;
    else if (name == "rtt_ms")
      value = fb.rtt_ms;
    else
      continue;
    auto scheme = model_.schemes.find(name);
    if (scheme == model_.schemes.end()) continue;
    const auto& nodes = model_.dag.nodes;
    auto node = std::find_if(nodes.begin(), nodes.end(),
                             [&](const NodeSpec& n) { return n.name == name; });
    if (node == nodes.end() || node->tunable) continue;
    ev[name] = discretize_value(scheme->second, value);
  }
  return ev;
}

CabinDecision CabinController::decide(const ScenarioConfig& cfg,
                                      const std::vector<Feedback>& feedbacks,
                                      double prev_rate_kbps) {
  if (!rate_is_tunable_parent_ || feedbacks.empty()) return {prev_rate_kbps, true, std::nullopt};

  const std::size_t n_rate = static_cast<std::size_t>(rate_cardinality_);
  std::vector<std::vector<double>> pooled;
  for (const auto& fb : feedbacks) {
    const Evidence ev = evidence_for(fb);
    auto it = cache_.find(ev);
    if (it == cache_.end()) {
      std::vector<std::vector<double>> post;
      Evidence with_rate = ev;
      for (std::size_t l = 0; l < n_rate; ++l) {
        with_rate[policy_.rate_node] = static_cast<int>(l);
        post.push_back(infer_marginal(model_, with_rate, policy_.qos_node));
      }
      it = cache_.emplace(ev, std::move(post)).first;
    }
    if (pooled.empty()) pooled.assign(n_rate, std::vector<double>(it->second[0].size(), 0.0));
    for (std::size_t l = 0; l < n_rate; ++l)
      for (std::size_t q = 0; q < pooled[l].size(); ++q) pooled[l][q] += it->second[l][q];
  }
  const double n = static_cast<double>(feedbacks.size());
  for (auto& row : pooled)
    for (double& v : row) v /= n;

  // Same walk as recommend_best: first preferred class reaching p_min,
  // otherwise the most probable (class, rate) pair. Ties keep the lower label.
  TuningRecommendation best{policy_.qos_node, -1, {}, -1.0};
  TuningRecommendation fallback = best;
  for (int target : preference_) {
    TuningRecommendation rec{policy_.qos_node, target, {}, -1.0};
    for (std::size_t l = 0; l < n_rate; ++l) {
      const double p = pooled[l][static_cast<std::size_t>(target)];
      if (p > rec.probability) {
        rec.probability = p;
        rec.assignment = {{policy_.rate_node, static_cast<int>(l)}};
      }
    }
    if (rec.probability >= policy_.p_min) {
      best = rec;
      break;
    }
    if (rec.probability > fallback.probability) fallback = rec;
  }
  if (best.target_label < 0) best = fallback;

  const auto& rate_scheme = model_.schemes.at(policy_.rate_node);
  CabinDecision decision;
  decision.rate_kbps =
      clamp_rate(cfg, label_to_value(rate_scheme, best.assignment.at(policy_.rate_node)));
  decision.recommendation = std::move(best);
  return decision;
}

CabinDecision controller_cabin(const BayesianNetworkModel& model, const ScenarioConfig& cfg,
                               const std::vector<Feedback>& feedbacks, double prev_rate_kbps) {
  CabinController controller(model, cfg.cabin);
  return controller.decide(cfg, feedbacks, prev_rate_kbps);
}

// ---------------------------------------------------------------------------
// Session

void SessionReport::aggregate() {
  double psnr_sum = 0.0, delay_sum = 0.0, delivered_sum = 0.0;
  long slots = 0, ticks = 0;
  starvations = 0;
  flagged_epochs = 0;
  for (const auto& e : epochs) {
    psnr_sum += e.frame_psnr_db * static_cast<double>(e.frame_psnrs.size());
    slots += static_cast<long>(e.frame_psnrs.size());
    delay_sum += e.playback_delay_ms * e.ticks;
    delivered_sum += e.delivered_kbps * e.ticks;
    ticks += e.ticks;
    starvations += e.starvations;
    if (e.flagged) ++flagged_epochs;
  }
  mean_psnr_db = slots > 0 ? psnr_sum / static_cast<double>(slots) : 0.0;
  mean_playback_delay_ms = ticks > 0 ? delay_sum / static_cast<double>(ticks) : 0.0;
  mean_throughput_kbps = ticks > 0 ? delivered_sum / static_cast<double>(ticks) : 0.0;
}

namespace {

enum class Playback { startup, playing, rebuffering };

struct Participant {
  std::vector<BackgroundFlow> flows;
  Rng estimate_rng{0};
  Rng frame_rng{0};
  double buffer_ms = 0.0;
  Playback state = Playback::startup;
  double prev_psnr = 0.0;
  double last_loss = 0.0;
  double last_rtt = 0.0;
};

}  // namespace

SessionReport run_session(const ScenarioConfig& cfg, const BayesianNetworkModel* model) {
  cfg.validate();
  std::optional<CabinController> cabin;
  if (cfg.strategy == Strategy::cabin) {
    if (model == nullptr) throw ConfigInvalid("the cabin strategy needs a trained model");
    cabin.emplace(*model, cfg.cabin);
  }

  const long n_ticks = cfg.ticks();
  const long per_epoch = cfg.ticks_per_epoch();
  const long total_slots = cfg.frame_slots();
  const double tick_ms = cfg.tick_s * 1000.0;
  auto slot_begin = [&](long tick) {
    const double s = std::ceil(static_cast<double>(tick) * cfg.tick_s * cfg.frame_rate_fps - 1e-9);
    return std::min(total_slots, static_cast<long>(s));
  };

  std::vector<Participant> people(static_cast<std::size_t>(cfg.participants));
  for (int p = 0; p < cfg.participants; ++p) {
    auto& person = people[static_cast<std::size_t>(p)];
    const auto pid = static_cast<std::uint64_t>(p);
    Rng bg(derive_seed(cfg.seed, {kBackground, pid}));
    person.flows = sample_path_background(cfg, p, bg);
    person.estimate_rng = Rng(derive_seed(cfg.seed, {kEstimate, pid}));
    person.frame_rng = Rng(derive_seed(cfg.seed, {kFrames, pid}));
    person.prev_psnr = cfg.psnr.floor_db;
    person.last_rtt = cfg.rtt_base_ms;
  }
  Rng explore_rng(derive_seed(cfg.seed, {kExplore}));

  SessionReport report;
  report.config = cfg;
  report.min_buffer_ms = std::numeric_limits<double>::infinity();
  double rate = cfg.strategy == Strategy::fixed ? cfg.fixed_rate_kbps : cfg.initial_rate_kbps;

  for (long epoch_start = 0; epoch_start < n_ticks; epoch_start += per_epoch) {
    const double t0 = static_cast<double>(epoch_start) * cfg.tick_s;
    std::vector<Feedback> feedbacks;
    for (int p = 0; p < cfg.participants; ++p) {
      auto& person = people[static_cast<std::size_t>(p)];
      const double avail = step_path(cfg, person.flows, t0, 0.0).avail_bw_kbps;
      feedbacks.push_back({p, estimate_bandwidth(avail, person.estimate_rng, cfg.bw_noise_frac),
                           person.buffer_ms, person.last_loss, person.last_rtt});
    }

    bool flagged = false;
    switch (cfg.strategy) {
      case Strategy::ton: rate = controller_ton(cfg, feedbacks); break;
      case Strategy::don: rate = controller_don(cfg, feedbacks, rate); break;
      case Strategy::explore: rate = explore_rng.uniform(cfg.min_rate_kbps, cfg.max_rate_kbps); break;
      case Strategy::fixed: break;
      case Strategy::cabin: {
        const auto d = cabin->decide(cfg, feedbacks, rate);
        rate = d.rate_kbps;
        flagged = d.flagged;
        break;
      }
    }

    const long epoch_end = std::min(n_ticks, epoch_start + per_epoch);
    const int packets = packets_per_frame(rate, cfg.frame_rate_fps, cfg.video_packet_bytes);
    const std::size_t first_record = report.epochs.size();
    for (int p = 0; p < cfg.participants; ++p) {
      EpochRecord r;
      r.time_s = t0;
      r.participant = p;
      r.strategy = cfg.strategy;
      r.video_rate_kbps = rate;
      r.est_bw_kbps = feedbacks[static_cast<std::size_t>(p)].est_bw_kbps;
      r.buffer_ms = feedbacks[static_cast<std::size_t>(p)].buffer_ms;
      r.flagged = flagged;
      report.epochs.push_back(std::move(r));
    }

    for (long tick = epoch_start; tick < epoch_end; ++tick) {
      const double t = static_cast<double>(tick) * cfg.tick_s;
      const double elapsed = static_cast<double>(tick + 1) * cfg.tick_s;
      const long s0 = slot_begin(tick);
      const long s1 = slot_begin(tick + 1);
      for (int p = 0; p < cfg.participants; ++p) {
        auto& person = people[static_cast<std::size_t>(p)];
        auto& rec = report.epochs[first_record + static_cast<std::size_t>(p)];
        const PathSample path = step_path(cfg, person.flows, t, rate);

        // Media keeps arriving while anything gets through; lost frames are
        // concealed at their deadline instead of draining the lead.
        if (path.delivered_kbps > 0.0) person.buffer_ms += tick_ms;

        bool playing = false;
        switch (person.state) {
          case Playback::startup:
            if (elapsed + kEps >= cfg.startup_delay_s) person.state = Playback::playing;
            break;
          case Playback::rebuffering:
            if (person.buffer_ms + kEps >= cfg.rebuffer_target_ms) person.state = Playback::playing;
            break;
          case Playback::playing:
            if (person.buffer_ms + kEps >= tick_ms) {
              person.buffer_ms = std::max(0.0, person.buffer_ms - tick_ms);
              playing = true;
              report.min_buffer_ms = std::min(report.min_buffer_ms, person.buffer_ms);
            } else {
              person.state = Playback::rebuffering;
              ++rec.starvations;
            }
            break;
        }

        double delay = person.buffer_ms;
        if (person.state == Playback::startup)
          delay += std::max(0.0, cfg.startup_delay_s - elapsed) * 1000.0;
        else if (person.state == Playback::rebuffering)
          delay = std::max(delay, cfg.rebuffer_target_ms);
        delay += 0.5 * path.rtt_ms;

        const double frame_loss = frame_loss_prob(path.loss_frac, packets);
        for (long s = s0; s < s1; ++s) {
          const bool lost = !playing || person.frame_rng.uniform() < frame_loss;
          person.prev_psnr = psnr_of_frame(cfg.psnr, rate, lost, person.prev_psnr);
          rec.frame_psnrs.push_back(person.prev_psnr);
        }

        rec.avail_bw_kbps += path.avail_bw_kbps;
        rec.delivered_kbps += path.delivered_kbps;
        rec.loss_frac += path.loss_frac;
        rec.rtt_ms += path.rtt_ms;
        rec.playback_delay_ms += delay;
        ++rec.ticks;
      }
    }

    for (int p = 0; p < cfg.participants; ++p) {
      auto& rec = report.epochs[first_record + static_cast<std::size_t>(p)];
      const double n = rec.ticks;
      rec.avail_bw_kbps /= n;
      rec.delivered_kbps /= n;
      rec.loss_frac /= n;
      rec.rtt_ms /= n;
      rec.playback_delay_ms /= n;
      rec.frame_psnr_db =
          rec.frame_psnrs.empty()
              ? people[static_cast<std::size_t>(p)].prev_psnr
              : std::accumulate(rec.frame_psnrs.begin(), rec.frame_psnrs.end(), 0.0) /
                    static_cast<double>(rec.frame_psnrs.size());
      people[static_cast<std::size_t>(p)].last_loss = rec.loss_frac;
      people[static_cast<std::size_t>(p)].last_rtt = rec.rtt_ms;
    }
  }

  if (!std::isfinite(report.min_buffer_ms)) report.min_buffer_ms = 0.0;
  report.aggregate();
  return report;
}

// ---------------------------------------------------------------------------
// Training

std::vector<ScenarioConfig> warmup_configs(const ScenarioConfig& base,
                                           const TrainingOptions& options) {
  std::vector<ScenarioConfig> out;
  for (int i = 0; i < options.sessions; ++i) {
    ScenarioConfig cfg = base;
    cfg.strategy = Strategy::explore;
    cfg.participants = options.participants;
    cfg.seed = derive_seed(options.seed, {static_cast<std::uint64_t>(i)});
    out.push_back(cfg);
  }
  return out;
}

const std::vector<std::string>& model_variables() {
  static const std::vector<std::string> names = {"video_rate_kbps", "est_bw_kbps", "buffer_ms",
                                                 "loss_frac",       "rtt_ms",      "frame_psnr_db"};
  return names;
}

std::vector<double> record_column(const std::vector<EpochRecord>& records, const std::string& name) {
  std::vector<double> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    if (name == "video_rate_kbps") out.push_back(r.video_rate_kbps);
    else if (name == "avail_bw_kbps") out.push_back(r.avail_bw_kbps);
    else if (name == "est_bw_kbps") out.push_back(r.est_bw_kbps);
    else if (name == "buffer_ms") out.push_back(r.buffer_ms);
    else if (name == "loss_frac") out.push_back(r.loss_frac);
    else if (name == "rtt_ms") out.push_back(r.rtt_ms);
    else if (name == "frame_psnr_db") out.push_back(r.frame_psnr_db);
    else if (name == "delivered_kbps") out.push_back(r.delivered_kbps);
    else throw MissingColumn("unknown variable '" + name + "'");
  }
  return out;
}

namespace {

std::string unit_of(const std::string& name) {
  if (name.ends_with("_kbps")) return "kbps";
  if (name.ends_with("_ms")) return "ms";
  if (name.ends_with("_db")) return "dB";
  return "fraction";
}

}  // namespace

BayesianNetworkModel learn_from_records(const std::vector<EpochRecord>& records,
                                        const CabinPolicy& policy,
                                        const DiscretizerOptions& discretizer,
                                        const LearnOptions& learn) {
  TraceDataset data;
  std::map<std::string, DiscretizationScheme> schemes;
  for (const auto& name : model_variables()) {
    SampleSeries series{name, record_column(records, name), unit_of(name)};
    auto scheme = build_scheme_or_constant(series, discretizer);
    data.add_column(name, scheme.size(), discretize_series(scheme, series).labels);
    schemes.emplace(name, std::move(scheme));
  }
  auto model = learn_model(data, policy.qos_node, {policy.rate_node}, learn);
  model.schemes = std::move(schemes);
  return model;
}

BayesianNetworkModel train_cabin(const std::vector<ScenarioConfig>& warmup,
                                 const DiscretizerOptions& discretizer, const LearnOptions& learn) {
  if (warmup.empty()) throw ConfigInvalid("training needs at least one warm-up session");
  std::vector<EpochRecord> records;
  for (const auto& cfg : warmup) {
    if (cfg.strategy == Strategy::cabin)
      throw ConfigInvalid("warm-up sessions must not use the cabin strategy");
    auto report = run_session(cfg);
    for (auto& r : report.epochs) {
      r.frame_psnrs.clear();
      records.push_back(std::move(r));
    }
  }
  return learn_from_records(records, warmup.front().cabin, discretizer, learn);
}

// ---------------------------------------------------------------------------
// Comparison

MetricSummary summarize(const std::vector<double>& samples) {
  MetricSummary s;
  if (samples.empty()) return s;
  const auto n = static_cast<double>(samples.size());
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
  if (samples.size() >= 2) {
    double ss = 0.0;
    for (double v : samples) ss += (v - s.mean) * (v - s.mean);
    const double half = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    s.ci95_lo = s.mean - half;
    s.ci95_hi = s.mean + half;
  }
  return s;
}

const ComparisonRow& ComparisonReport::row(int participants, Strategy s) const {
  for (const auto& r : rows)
    if (r.participants == participants && r.strategy == s) return r;
  throw ConfigInvalid("no comparison row for " + std::to_string(participants) + "/" +
                      to_string(s));
}

ComparisonReport run_comparison(const ComparisonOptions& options,
                                const BayesianNetworkModel* model) {
  if (options.reps < 1) throw ConfigInvalid("reps must be >= 1");
  if (options.participants.empty() || options.strategies.empty())
    throw ConfigInvalid("comparison needs scenarios and strategies");

  std::optional<BayesianNetworkModel> trained;
  const bool wants_cabin = std::find(options.strategies.begin(), options.strategies.end(),
                                     Strategy::cabin) != options.strategies.end();
  if (wants_cabin && model == nullptr) {
    trained = train_cabin(warmup_configs(options.base, options.training),
                          options.training.discretizer, options.training.learn);
    model = &*trained;
  }

  struct Cell {
    int participants;
    Strategy strategy;
    int rep;
    double psnr = 0.0, delay = 0.0, throughput = 0.0;
  };
  std::vector<Cell> cells;
  for (int n : options.participants)
    for (Strategy s : options.strategies)
      for (int r = 0; r < options.reps; ++r) cells.push_back({n, s, r});

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size() || failed) return;
      auto& cell = cells[i];
      ScenarioConfig cfg = options.base;
      cfg.participants = cell.participants;
      cfg.strategy = cell.strategy;
      cfg.seed = options.first_seed + static_cast<std::uint64_t>(cell.rep);
      try {
        const auto report = run_session(cfg, model);
        cell.psnr = report.mean_psnr_db;
        cell.delay = report.mean_playback_delay_ms;
        cell.throughput = report.mean_throughput_kbps;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  ComparisonReport report;
  report.sessions = static_cast<int>(cells.size());
  for (std::size_t i = 0; i < cells.size(); i += static_cast<std::size_t>(options.reps)) {
    std::vector<double> psnr, delay, tput;
    for (int r = 0; r < options.reps; ++r) {
      const auto& c = cells[i + static_cast<std::size_t>(r)];
      psnr.push_back(c.psnr);
      delay.push_back(c.delay);
      tput.push_back(c.throughput);
    }
    report.rows.push_back({cells[i].participants, cells[i].strategy, options.reps,
                           summarize(psnr), summarize(delay), summarize(tput)});
  }
  return report;
}

}  // namespace cabin
