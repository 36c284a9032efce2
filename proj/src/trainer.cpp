#include "okgc/trainer.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "okgc/cluster_init.hpp"
#include "okgc/errors.hpp"
#include "okgc/kge.hpp"

namespace okgc {

namespace {

enum Stream : std::uint64_t {
  kProjection = 1,
  kEntityParams = 2,
  kRelationParams = 3,
  kEntityLookupInit = 4,
  kRelationLookupInit = 5,
  kKmeans = 6,
  kTraining = 7,
};

std::vector<Eigen::Index> rows_of(const std::vector<MentionId>& ids) {
  return {ids.begin(), ids.end()};
}

std::vector<std::uint32_t> labels_of(const Clustering& c, const std::vector<MentionId>& ids) {
  std::vector<std::uint32_t> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(c.label(id));
  return out;
}

// Slice b of nb near-equal slices of `pairs`.
SideInfoPairs chunk(const SideInfoPairs& pairs, std::size_t b, std::size_t nb) {
  const auto lo = pairs.size() * b / nb, hi = pairs.size() * (b + 1) / nb;
  return {pairs.begin() + static_cast<std::ptrdiff_t>(lo), pairs.begin() + static_cast<std::ptrdiff_t>(hi)};
}

template <class LossFn>
void run_epochs(Model& m, const OpenKG& kg, const SideInfo& si, std::mt19937_64& rng,
                std::size_t epochs, double lr, int step, const ProgressFn& progress,
                LossFn loss_fn) {
  if (epochs == 0) return;
  if (kg.triples.empty()) throw ContractError("training needs at least one triple");
  ad::AdamConfig adam;
  adam.lr = lr;
  const std::size_t bs = m.cfg.batch_size;
  const std::size_t nb = (kg.triples.size() + bs - 1) / bs;
  std::vector<std::size_t> order(kg.triples.size());
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    SideInfo shuffled = si;
    std::shuffle(shuffled.entities.begin(), shuffled.entities.end(), rng);
    std::shuffle(shuffled.relations.begin(), shuffled.relations.end(), rng);
    double total = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      std::vector<Triple> batch;
      for (std::size_t i = b * bs; i < std::min(order.size(), (b + 1) * bs); ++i)
        batch.push_back(kg.triples[order[i]]);
      SideInfo part{chunk(shuffled.entities, b, nb), chunk(shuffled.relations, b, nb)};
      try {
        m.store.zero_grad();
        auto loss = loss_fn(m, batch, part, rng);
        if (!std::isfinite(loss.item())) throw NumericError("non-finite loss");
        ad::backward(loss);
        ad::adam_step(m.store, adam);
        total += loss.item();
      } catch (const NumericError& e) {
        throw NumericError("step " + std::to_string(step) + " diverged at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(b) + ": " +
                           e.what());
      }
    }
    if (progress) progress({step, epoch, total});
  }
  m.store.clear_grad();
}

}  // namespace

std::mt19937_64 derive_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

Clustering initial_clustering(const Matrix& points, double theta, const TrainConfig& cfg,
                              std::size_t kmeans_k, Namespace ns) {
  HacConfig hac{theta, cfg.threads};
  if (cfg.init == InitMethod::kHac) return hac_cluster(points, hac, ns);
  std::size_t k = kmeans_k;
  if (k == 0) k = hac_cluster(points, hac, ns).num_clusters();
  const auto seed = derive_rng(cfg.seed, kKmeans + (ns == Namespace::kRelation ? 100 : 0))();
  return kmeans_cluster(points, k, seed, 100, ns);
}

GaussianMixture latent_mixture(const Matrix& points, const Clustering& clustering,
                               const TrainConfig& cfg, std::uint64_t stream) {
  const auto d = static_cast<Eigen::Index>(cfg.latent_dim);
  if (points.cols() == d) return init_mixture(points, clustering, cfg.var_floor);
  auto rng = derive_rng(cfg.seed, kProjection * 1000 + stream);
  Matrix proj = standard_normal(rng, points.cols(), d) / std::sqrt(static_cast<double>(d));
  return init_mixture(points * proj, clustering, cfg.var_floor);
}

Model initialize_model(const Matrix& entity_points, const Matrix& relation_points,
                       const TrainConfig& cfg) {
  cfg.validate();
  Model m;
  m.cfg = cfg;
  const VaeShape shape{cfg.input_dim, cfg.effective_hidden(), cfg.latent_dim};
  m.entity = Vae("entity", shape);
  m.relation = Vae("relation", shape);
  m.init.entities =
      initial_clustering(entity_points, cfg.theta_e, cfg, cfg.kmeans_k_e, Namespace::kEntity);
  m.init.relations =
      initial_clustering(relation_points, cfg.theta_r, cfg, cfg.kmeans_k_r, Namespace::kRelation);

  auto re = derive_rng(cfg.seed, kEntityParams);
  m.entity.register_params(m.store, latent_mixture(entity_points, m.init.entities, cfg, 0), re);
  auto rr = derive_rng(cfg.seed, kRelationParams);
  m.relation.register_params(m.store, latent_mixture(relation_points, m.init.relations, cfg, 1),
                             rr);
  const auto le = derive_rng(cfg.seed, kEntityLookupInit)();
  const auto lr = derive_rng(cfg.seed, kRelationLookupInit)();
  m.store.add(kEntityLookup,
              init_lookup(static_cast<std::size_t>(entity_points.rows()), cfg.input_dim, le).matrix);
  m.store.add(kRelationLookup,
              init_lookup(static_cast<std::size_t>(relation_points.rows()), cfg.input_dim, lr).matrix);
  return m;
}

Model initialize_model(const OpenKG& kg, const WordVectors& wv, const TrainConfig& cfg) {
  return initialize_model(embed_phrases(kg.entities, wv, cfg.embed_mode).matrix,
                          embed_phrases(kg.relations, wv, cfg.embed_mode).matrix, cfg);
}

ad::Var step1_loss(const Model& m, const std::vector<Triple>& batch, const SideInfo& si,
                   std::mt19937_64& rng) {
  std::vector<MentionId> ents, rels;
  for (const auto& t : batch) ents.push_back(t.head);
  for (const auto& t : batch) ents.push_back(t.tail);
  for (const auto& t : batch) rels.push_back(t.rel);
  const auto& le = m.store.get(kEntityLookup);
  const auto& lr = m.store.get(kRelationLookup);
  const auto dz = static_cast<Eigen::Index>(m.cfg.latent_dim);

  auto x_e = ad::gather_rows(le, rows_of(ents));
  auto x_r = ad::gather_rows(lr, rows_of(rels));
  Matrix eps_e = standard_normal(rng, x_e.rows(), dz);
  Matrix eps_r = standard_normal(rng, x_r.rows(), dz);
  auto loss = ad::add(nll_loss(m.entity, m.store, x_e, eps_e, labels_of(m.init.entities, ents)),
                      nll_loss(m.relation, m.store, x_r, eps_r, labels_of(m.init.relations, rels)));
  if (m.cfg.l1_lambda > 0.0) {
    auto l1 = ad::add(l1_norm(m.store, m.entity.encoder_params()),
                      l1_norm(m.store, m.relation.encoder_params()));
    loss = ad::add(loss, ad::scale(l1, m.cfg.l1_lambda));
  }
  loss = ad::add(loss, side_info_loss(si.entities, le));
  return ad::add(loss, side_info_loss(si.relations, lr));
}

ad::Var step2_loss(const Model& m, const std::vector<Triple>& batch, const SideInfo& si,
                   std::mt19937_64& rng) {
  std::vector<MentionId> ents, rels;
  for (const auto& t : batch) ents.push_back(t.head);
  for (const auto& t : batch) ents.push_back(t.tail);
  for (const auto& t : batch) rels.push_back(t.rel);
  const auto& le = m.store.get(kEntityLookup);
  const auto& lr = m.store.get(kRelationLookup);
  const auto dz = static_cast<Eigen::Index>(m.cfg.latent_dim);

  auto x_e = ad::gather_rows(le, rows_of(ents));
  auto x_r = ad::gather_rows(lr, rows_of(rels));
  Matrix eps_e = standard_normal(rng, x_e.rows(), dz);
  Matrix eps_r = standard_normal(rng, x_r.rows(), dz);
  auto loss = ad::add(elbo_loss(m.entity, m.store, x_e, eps_e).total,
                      elbo_loss(m.relation, m.store, x_r, eps_r).total);
  if (!m.cfg.no_kge) {
    auto negatives = sample_negatives(batch, static_cast<std::size_t>(le.rows()),
                                      {m.cfg.num_negatives}, rng);
    KgeInputs in{&m.entity, &m.relation, &m.store, le, lr};
    loss = ad::add(loss, kge_loss(in, batch, negatives, {m.cfg.tau}, m.cfg.kge_loss));
  }
  if (m.cfg.l1_lambda > 0.0) {
    auto l1 = ad::add(l1_norm(m.store, m.entity.decoder_params()),
                      l1_norm(m.store, m.relation.decoder_params()));
    loss = ad::add(loss, ad::scale(l1, m.cfg.l1_lambda));
  }
  loss = ad::add(loss, side_info_loss(si.entities, le));
  return ad::add(loss, side_info_loss(si.relations, lr));
}

void train_step1(Model& m, const OpenKG& kg, const SideInfo& si, std::mt19937_64& rng,
                 const ProgressFn& progress) {
  m.store.freeze_all();
  m.store.set_trainable(m.entity.encoder_params(), true);
  m.store.set_trainable(m.relation.encoder_params(), true);
  if (!m.cfg.freeze_lookup_step1) m.store.set_trainable(m.lookup_params(), true);
  run_epochs(m, kg, si, rng, m.cfg.epochs_step1, m.cfg.lr_step1, 1, progress, step1_loss);
  m.store.freeze_all();
}

void train_step2(Model& m, const OpenKG& kg, const SideInfo& si, std::mt19937_64& rng,
                 const ProgressFn& progress) {
  m.store.freeze_all();
  for (const Vae* v : {&m.entity, &m.relation}) {
    m.store.set_trainable(v->decoder_params(), true);
    m.store.set_trainable(v->mixture_params(), true);
  }
  if (!m.cfg.freeze_lookup_step2) m.store.set_trainable(m.lookup_params(), true);
  run_epochs(m, kg, si, rng, m.cfg.epochs_step2, m.cfg.lr_step2, 2, progress, step2_loss);
  m.store.freeze_all();
}

namespace {

Clustering assign_all(const Vae& vae, const ad::ParamStore& store, const Matrix& lookup,
                      std::size_t batch, Namespace ns) {
  std::vector<std::int64_t> labels;
  labels.reserve(static_cast<std::size_t>(lookup.rows()));
  for (Eigen::Index lo = 0; lo < lookup.rows(); lo += static_cast<Eigen::Index>(batch)) {
    const auto n = std::min<Eigen::Index>(static_cast<Eigen::Index>(batch), lookup.rows() - lo);
    for (auto l : assign(vae, store, lookup.middleRows(lo, n))) labels.push_back(l);
  }
  return Clustering::from_labels(labels, ns);
}

Matrix encoder_means(const Vae& vae, const ad::ParamStore& store, const Matrix& lookup) {
  ad::NoGradGuard guard;
  return vae.encode(store, ad::constant(lookup)).mu.value();
}

}  // namespace

ClusterPair infer_clusters(const Model& m) {
  const auto bs = m.cfg.eval_batch_size;
  return {assign_all(m.entity, m.store, m.store.get(kEntityLookup).value(), bs, Namespace::kEntity),
          assign_all(m.relation, m.store, m.store.get(kRelationLookup).value(), bs,
                     Namespace::kRelation)};
}

ClusterPair run_pipeline_ablation(const Model& m) {
  const auto ze = encoder_means(m.entity, m.store, m.store.get(kEntityLookup).value());
  const auto zr = encoder_means(m.relation, m.store, m.store.get(kRelationLookup).value());
  return {hac_cluster(ze, {m.cfg.theta_e, m.cfg.threads}, Namespace::kEntity),
          hac_cluster(zr, {m.cfg.theta_r, m.cfg.threads}, Namespace::kRelation)};
}

ClusterPair predict(const Model& m) {
  return m.cfg.pipeline_vae_hac ? run_pipeline_ablation(m) : infer_clusters(m);
}

ClusterPair run_pipeline(const OpenKG& kg, const WordVectors& wv, const SideInfo& si,
                         const TrainConfig& cfg, const ProgressFn& progress) {
  auto m = initialize_model(kg, wv, cfg);
  auto rng = derive_rng(cfg.seed, kTraining);
  train_step1(m, kg, si, rng, progress);
  train_step2(m, kg, si, rng, progress);
  return predict(m);
}

SideInfo generate_side_info(const OpenKG& kg, const TrainConfig& cfg) {
  return {merge_pairs({idf_overlap_pairs(kg.entities, cfg.idf_threshold_e), morph_pairs(kg.entities)}),
          merge_pairs({idf_overlap_pairs(kg.relations, cfg.idf_threshold_r),
                       morph_pairs(kg.relations)})};
}

// ---- Checkpoints ----

namespace {

constexpr char kMagic[8] = {'O', 'K', 'G', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& in, const std::string& path) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw IoError("truncated checkpoint " + path);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_bytes(std::ostream& out, const std::string& s) {
  put_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_bytes(std::istream& in, const std::string& path, std::uint64_t limit) {
  const auto n = get_u64(in, path);
  if (n > limit) throw IoError("corrupt checkpoint " + path);
  std::string s(n, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(n))) throw IoError("truncated checkpoint " + path);
  return s;
}

}  // namespace

void save_checkpoint(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  const auto& names = m.store.names();
  put_u64(out, names.size());
  for (const auto& name : names) {
    const Matrix& v = m.store.get(name).value();
    put_bytes(out, name);
    put_u64(out, static_cast<std::uint64_t>(v.rows()));
    put_u64(out, static_cast<std::uint64_t>(v.cols()));
    for (Eigen::Index i = 0; i < v.size(); ++i) put_u64(out, std::bit_cast<std::uint64_t>(v.data()[i]));
  }
  nlohmann::json manifest;
  manifest["format"] = "okgc-checkpoint";
  manifest["config"] = to_config_text(m.cfg);
  manifest["entity_labels"] = m.init.entities.labels();
  manifest["relation_labels"] = m.init.relations.labels();
  put_bytes(out, manifest.dump(1));
  if (!out) throw IoError("write failed: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
  const std::string p = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + p);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw IoError(p + " is not a checkpoint");
  const auto size = std::filesystem::file_size(path);
  const auto count = get_u64(in, p);
  std::vector<std::pair<std::string, Matrix>> tensors;
  for (std::uint64_t k = 0; k < count; ++k) {
    auto name = get_bytes(in, p, 4096);
    const auto rows = get_u64(in, p), cols = get_u64(in, p);
    if (rows * cols > size / 8) throw IoError("corrupt checkpoint " + p);
    Matrix v(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] = std::bit_cast<double>(get_u64(in, p));
    tensors.emplace_back(std::move(name), std::move(v));
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(get_bytes(in, p, size));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint manifest in " + p + ": " + e.what());
  }
  Model m;
  m.cfg = parse_train_config(manifest.at("config").get<std::string>(), p + " (manifest)");
  const VaeShape shape{m.cfg.input_dim, m.cfg.effective_hidden(), m.cfg.latent_dim};
  m.entity = Vae("entity", shape);
  m.relation = Vae("relation", shape);
  m.init.entities =
      Clustering(manifest.at("entity_labels").get<std::vector<std::uint32_t>>(), Namespace::kEntity);
  m.init.relations = Clustering(manifest.at("relation_labels").get<std::vector<std::uint32_t>>(),
                                Namespace::kRelation);
  for (auto& [name, v] : tensors) m.store.add(name, std::move(v));
  return m;
}

}  // namespace okgc
