#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cabin/bayesnet.hpp"
#include "cabin/random.hpp"
#include "cabin/tuner.hpp"

namespace cabin {

enum class Strategy {
  cabin,
  ton,
  don,
  explore,  // uniform random rate per epoch (training warm-up)
  fixed,    // constant rate
};

std::string to_string(Strategy s);
Strategy parse_strategy(const std::string& name);  // throws ConfigInvalid

/// Rate-quality model for a decoded frame and its loss concealment.
struct PsnrModel {
  double beta0_db = 36.0;        // PSNR at the reference rate
  double beta1_db = 4.0;         // dB per unit of ln(rate / reference)
  double reference_kbps = 700.0;
  double min_db = 20.0;
  double max_db = 48.0;
  double conceal_drop_db = 6.0;
  double floor_db = 20.0;
};

struct DonParams {
  double target_ms = 2000.0;
  double low_ms = 500.0;
  double gain = 0.2;
};

/// Piecewise-constant bottleneck capacity; each step holds from `from_s`.
struct CapacityStep {
  double from_s = 0.0;
  double capacity_kbps = 0.0;
};

/// Which contexts the CABIN controller observes and how it merges
/// per-participant recommendations into the single session rate.
struct CabinPolicy {
  std::string qos_node = "frame_psnr_db";
  std::string rate_node = "video_rate_kbps";
  std::vector<std::string> evidence_nodes = {"est_bw_kbps", "buffer_ms"};
  double p_min = 0.5;
};

struct ScenarioConfig {
  int participants = 4;
  double duration_s = 300.0;
  double tick_s = 0.1;
  double epoch_s = 2.5;
  std::uint64_t seed = 1;
  Strategy strategy = Strategy::ton;
  double base_capacity_kbps = 3000.0;
  double bw_noise_frac = 0.10;
  double min_rate_kbps = 100.0;
  double max_rate_kbps = 2000.0;
  double frame_rate_fps = 25.0;
  double startup_delay_s = 1.0;

  double initial_rate_kbps = 700.0;
  double fixed_rate_kbps = 500.0;
  bool background_traffic = true;
  std::vector<CapacityStep> capacity_schedule;  // overrides base capacity when set
  double rebuffer_target_ms = 2000.0;
  double rtt_base_ms = 20.0;
  double rtt_queue_ms = 100.0;  // added at full utilization
  int video_packet_bytes = 1500;
  PsnrModel psnr;
  DonParams don;
  CabinPolicy cabin;

  /// Throws ConfigInvalid.
  void validate() const;
  double capacity_at(double t) const;
  long ticks() const;
  long ticks_per_epoch() const;
  long frame_slots() const;
};

enum class FlowKind { ftp, cbr, pareto };
std::string to_string(FlowKind k);

/// One background flow on a participant's bottleneck. `end_s` is the
/// effective end (duration, data size, or for FTP the time its fair share
/// drains the data). Pareto flows alternate between the listed on-periods.
struct BackgroundFlow {
  FlowKind kind = FlowKind::cbr;
  int participant = 0;
  double start_s = 0.0;
  double duration_s = 0.0;
  int packet_bytes = 0;
  double rate_kbps = 0.0;   // 0 for FTP, which takes a fair share
  double data_kbit = 0.0;   // 0 when unbounded
  double end_s = 0.0;
  std::vector<std::pair<double, double>> on_periods;

  bool active_at(double t) const;
};

/// One FTP, CBR and Pareto flow per participant, drawn from the ranges of
/// the background-traffic table. Participant p's flows depend only on
/// (stream_seed, p).
std::vector<BackgroundFlow> sample_background(const ScenarioConfig& cfg, std::uint64_t stream_seed);
std::vector<BackgroundFlow> sample_path_background(const ScenarioConfig& cfg, int participant,
                                                   Rng& rng);

struct PathSample {
  double avail_bw_kbps = 0.0;
  double delivered_kbps = 0.0;
  double loss_frac = 0.0;
  double background_kbps = 0.0;
  double rtt_ms = 0.0;
};

/// Memoryless bottleneck at time t. Only flows of one participant should
/// be passed.
PathSample step_path(const ScenarioConfig& cfg, const std::vector<BackgroundFlow>& flows,
                     double t, double video_rate_kbps);

double estimate_bandwidth(double true_bw_kbps, Rng& rng, double noise_frac);

double psnr_of_frame(const PsnrModel& model, double rate_kbps, bool lost, double prev_psnr_db);

/// A frame is decodable only when all of its packets arrive.
int packets_per_frame(double rate_kbps, double fps, int packet_bytes);
double frame_loss_prob(double packet_loss, int packets);

struct Feedback {
  int participant = 0;
  double est_bw_kbps = 0.0;
  double buffer_ms = 0.0;
  double loss_frac = 0.0;
  double rtt_ms = 0.0;
};

double controller_ton(const ScenarioConfig& cfg, const std::vector<Feedback>& feedbacks);
double controller_don(const ScenarioConfig& cfg, const std::vector<Feedback>& feedbacks,
                      double prev_rate_kbps);

struct CabinDecision {
  double rate_kbps = 0.0;
  bool flagged = false;  // no tunable rate parent; previous rate kept
  std::optional<TuningRecommendation> recommendation;
};

/// Context-aware rate control over one shared session rate. Each
/// participant's observed contexts are discretized; for every rate label the
/// QoS posterior is averaged over participants, and the preference walk of
/// recommend_best is run on those pooled probabilities. Posteriors are
/// memoized per evidence.
class CabinController {
 public:
  /// Throws UntrainedModel when the model lacks the QoS or rate node.
  CabinController(const BayesianNetworkModel& model, const CabinPolicy& policy);

  CabinDecision decide(const ScenarioConfig& cfg, const std::vector<Feedback>& feedbacks,
                       double prev_rate_kbps);

  Evidence evidence_for(const Feedback& fb) const;

 private:
  const BayesianNetworkModel& model_;
  CabinPolicy policy_;
  bool rate_is_tunable_parent_ = false;
  std::vector<int> preference_;
  int rate_cardinality_ = 0;
  // evidence -> per rate label QoS posterior
  std::map<Evidence, std::vector<std::vector<double>>> cache_;
};

CabinDecision controller_cabin(const BayesianNetworkModel& model, const ScenarioConfig& cfg,
                               const std::vector<Feedback>& feedbacks, double prev_rate_kbps);

struct EpochRecord {
  double time_s = 0.0;
  int participant = 0;
  Strategy strategy = Strategy::ton;
  double video_rate_kbps = 0.0;
  double avail_bw_kbps = 0.0;  // mean true availability over the epoch
  double est_bw_kbps = 0.0;    // estimate fed to the controller at epoch start
  double buffer_ms = 0.0;      // buffer at epoch start
  double loss_frac = 0.0;
  double rtt_ms = 0.0;
  double frame_psnr_db = 0.0;  // mean over the epoch's frame slots
  double delivered_kbps = 0.0;
  double playback_delay_ms = 0.0;
  int ticks = 0;
  int starvations = 0;
  bool flagged = false;
  std::vector<double> frame_psnrs;
};

struct SessionReport {
  ScenarioConfig config;
  std::vector<EpochRecord> epochs;  // epoch-major, participant-minor
  double mean_psnr_db = 0.0;        // over all frame slots
  double mean_playback_delay_ms = 0.0;
  double mean_throughput_kbps = 0.0;
  int starvations = 0;
  int flagged_epochs = 0;
  double min_buffer_ms = 0.0;       // lowest buffer seen while playing

  /// Recomputes the aggregates from `epochs`.
  void aggregate();
};

/// Deterministic session emulation. Throws ConfigInvalid (including a cabin
/// strategy without a model).
SessionReport run_session(const ScenarioConfig& cfg, const BayesianNetworkModel* model = nullptr);

struct TrainingOptions {
  int sessions = 4;
  int participants = 8;
  std::uint64_t seed = 1000;
  DiscretizerOptions discretizer;
  LearnOptions learn;
};

/// Rate-exploring warm-up sessions derived from a base scenario.
std::vector<ScenarioConfig> warmup_configs(const ScenarioConfig& base,
                                           const TrainingOptions& options);

/// Variables learned from epoch records, in column order.
const std::vector<std::string>& model_variables();

/// Numeric view of one epoch-record column.
std::vector<double> record_column(const std::vector<EpochRecord>& records, const std::string& name);

/// Discretize, order, learn structure and parameters from epoch records.
BayesianNetworkModel learn_from_records(const std::vector<EpochRecord>& records,
                                        const CabinPolicy& policy,
                                        const DiscretizerOptions& discretizer,
                                        const LearnOptions& learn);

/// Runs the warm-up sessions and learns the CABIN model from their records.
BayesianNetworkModel train_cabin(const std::vector<ScenarioConfig>& warmup,
                                 const DiscretizerOptions& discretizer = {},
                                 const LearnOptions& learn = {});

struct MetricSummary {
  double mean = 0.0;
  std::optional<double> ci95_lo;
  std::optional<double> ci95_hi;

  bool operator==(const MetricSummary&) const = default;
};

/// Mean and normal-approximation 95% interval (absent for fewer than two samples).
MetricSummary summarize(const std::vector<double>& samples);

struct ComparisonRow {
  int participants = 0;
  Strategy strategy = Strategy::ton;
  int reps = 0;
  MetricSummary psnr_db;
  MetricSummary playback_delay_ms;
  MetricSummary throughput_kbps;

  bool operator==(const ComparisonRow&) const = default;
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;  // sorted by participants, then strategy order given
  int sessions = 0;

  const ComparisonRow& row(int participants, Strategy s) const;
};

struct ComparisonOptions {
  std::vector<int> participants = {4, 8, 12, 16};
  int reps = 5;
  std::uint64_t first_seed = 1;  // rep r uses first_seed + r
  std::vector<Strategy> strategies = {Strategy::cabin, Strategy::ton, Strategy::don};
  ScenarioConfig base;
  TrainingOptions training;
  int jobs = 1;
};

/// Runs every (scenario, strategy, rep) cell. When the cabin strategy is
/// requested and `model` is null, a model is trained first from
/// `options.training`.
ComparisonReport run_comparison(const ComparisonOptions& options,
                                const BayesianNetworkModel* model = nullptr);

}  // namespace cabin
