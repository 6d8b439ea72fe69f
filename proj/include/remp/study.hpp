#pragma once

#include <memory>
#include <mutex>
#include <random>
#include <unordered_map>

#include "remp/experiment.hpp"

// after Eigen: resolv.h, pulled in by httplib, defines a `_res` macro
#include <httplib.h>

namespace remp {

enum class Phase { calibration, query, collab, done };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::calibration: return "calibration";
    case Phase::query: return "query";
    case Phase::collab: return "collab";
    case Phase::done: return "done";
  }
  return "calibration";
}

inline Phase phase_from_string(std::string_view s) {
  if (s == "calibration") return Phase::calibration;
  if (s == "query") return Phase::query;
  if (s == "collab") return Phase::collab;
  if (s == "done") return Phase::done;
  throw Error(ErrorCode::invalid_argument, "unknown phase '" + std::string(s) + "'");
}

inline constexpr std::size_t kStudyDemos = 4;

struct Session {
  explicit Session(SessionBundle b, std::string session_id = {})
      : bundle(std::move(b)), id(std::move(session_id)) {}

  SessionBundle bundle;
  std::string id;
  Phase phase = Phase::calibration;
  std::optional<GameState> game;  // present iff phase >= collab
  std::optional<double> human_iou;
  std::vector<std::size_t> selection;
  Transcript transcript;  // rounds played so far
};

/// Moves the phase forward; never backwards.
inline void advance(Session& s, Phase to) {
  if (static_cast<int>(to) <= static_cast<int>(s.phase)) {
    throw Error(ErrorCode::wrong_phase, "cannot move from " + std::string(to_string(s.phase)) + " to " +
                                            std::string(to_string(to)));
  }
  s.phase = to;
  if (to >= Phase::collab && !s.game) s.game = GameState(s.bundle.scene.size());
}

inline json session_to_json(const Session& s) {
  json j = {{"id", s.id},
            {"phase", std::string(to_string(s.phase))},
            {"human_iou", s.human_iou ? json(*s.human_iou) : json(nullptr)},
            {"selection", s.selection},
            {"game", s.game ? to_json(*s.game) : json(nullptr)},
            {"transcript", to_json(s.transcript)},
            {"bundle", to_json(s.bundle)}};
  return j;
}

inline Session session_from_json(const json& j) {
  Session s(bundle_from_json(j.at("bundle")), j.at("id").get<std::string>());
  s.phase = phase_from_string(j.at("phase").get<std::string>());
  if (!j.at("game").is_null()) s.game = game_from_json(j.at("game"));
  if (!j.at("human_iou").is_null()) s.human_iou = j.at("human_iou").get<double>();
  s.selection = j.at("selection").get<std::vector<std::size_t>>();
  s.transcript = transcript_from_json(j.at("transcript"));
  return s;
}

/// What the participant sees: demos as frames, the lattice and the table,
/// with no ground truth.
inline json session_view(const Session& s) {
  const auto& b = s.bundle;
  json demos = json::array();
  for (const auto& d : b.demos) {
    demos.push_back({{"target", point_to_json(d.target)}, {"frames", demo_frames(d.plan.trajectory, b.arm)}});
  }
  json lattice = json::array();
  for (std::size_t i = 0; i < b.queries.size(); ++i) {
    lattice.push_back({{"index", i}, {"position", point_to_json(b.queries[i])}});
  }
  return {{"id", s.id},
          {"robot", b.robot},
          {"condition", b.condition},
          {"seed", b.seed},
          {"phase", std::string(to_string(s.phase))},
          {"arm", to_json(b.arm)},
          {"demos", demos},
          {"query_lattice", lattice},
          {"scene", to_json(b.scene, false)},
          {"human_iou", s.human_iou ? json(*s.human_iou) : json(nullptr)},
          {"game", s.game ? to_json(*s.game) : json(nullptr)},
          {"transcript", to_json(s.transcript)}};
}

struct StudyConfig {
  std::filesystem::path store_dir = "sessions";
  ExperimentConfig experiment;  // belief/planner params and grid for bundle generation
};

/// Session store and game arbiter. Sessions persist as <store>/<id>.json and
/// generated bundles are cached under <store>/bundles/.
class StudyService {
 public:
  explicit StudyService(StudyConfig config) : config_(std::move(config)) {
    ensure_dir(config_.store_dir);
    ensure_dir(config_.store_dir / "bundles");
  }

  json robots() const {
    json out = json::array();
    for (const auto& name : preset_names()) out.push_back({{"name", name}, {"arm", to_json(preset(name))}});
    return out;
  }

  json create_session(const std::string& robot, const std::string& condition, std::uint64_t seed) {
    if (!find_preset(robot)) throw Error(ErrorCode::not_found, "unknown robot preset '" + robot + "'");
    const Condition c = condition_from_string(condition);
    auto slot = std::make_shared<Slot>(Session(load_bundle(robot, c, seed)));
    advance(slot->session, Phase::query);  // demos are delivered with the creation response
    {
      std::lock_guard lock(map_mutex_);
      do {
        slot->session.id = new_id();
      } while (sessions_.contains(slot->session.id) || std::filesystem::exists(session_path(slot->session.id)));
      sessions_[slot->session.id] = slot;
    }
    std::lock_guard lock(slot->mutex);
    persist(slot->session);
    return session_view(slot->session);
  }

  json get_session(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return session_view(slot->session);
  }

  Session snapshot(const std::string& id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    return slot->session;
  }

  json submit_reachability(const std::string& id, const std::vector<std::size_t>& selection) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    Session& s = slot->session;
    if (s.phase != Phase::query) {
      throw Error(ErrorCode::wrong_phase, "reachability already submitted or not yet available");
    }
    const auto& q = s.bundle.queries;
    std::vector<bool> chosen(q.size(), false), truth(q.size(), false);
    for (auto i : selection) {
      if (i >= q.size()) throw Error(ErrorCode::out_of_bounds, "query index " + std::to_string(i) + " out of range");
      chosen[i] = true;
    }
    for (std::size_t i = 0; i < q.size(); ++i) truth[i] = s.bundle.truth.reachable_at(q[i]);
    const double score = iou_of_sets(chosen, truth);
    s.human_iou = score;
    s.selection.clear();
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (chosen[i]) s.selection.push_back(i);
    }
    advance(s, Phase::collab);
    persist(s);
    return {{"iou", score}, {"phase", std::string(to_string(s.phase))}};
  }

  json collab_pick(const std::string& id, std::size_t object_id) {
    auto slot = find(id);
    std::lock_guard lock(slot->mutex);
    Session& s = slot->session;
    if (s.phase != Phase::collab) throw Error(ErrorCode::wrong_phase, "the game is not in progress");
    GameState g = *s.game;
    const int before = g.reward;
    apply_human_pick(g, object_id);
    std::optional<std::size_t> robot;
    if (!g.over()) {
      robot = robot_pick(g, s.bundle.scene, s.bundle.truth, derive_seed(s.bundle.seed, 0x90b0ULL, g.round));
      apply_robot_pick(g, robot);
    }
    s.game = g;
    if (s.transcript.rounds.empty()) {
      const BeliefMap& b = s.bundle.beliefs.back();
      for (const auto& o : s.bundle.scene.objects) s.transcript.object_beliefs.push_back(b.lookup(o.position));
    }
    s.transcript.rounds.push_back({g.round, object_id, robot, g.reward});
    s.transcript.final_reward = g.reward;
    if (g.over()) advance(s, Phase::done);
    persist(s);
    json out = {{"human", object_id},
                {"robot", robot ? json(*robot) : json(nullptr)},
                {"reward_delta", g.reward - before},
                {"reward", g.reward},
                {"game", to_json(g)},
                {"phase", std::string(to_string(s.phase))}};
    if (g.over()) out["final_reward"] = g.reward;
    return out;
  }

  const StudyConfig& config() const { return config_; }

 private:
  struct Slot {
    explicit Slot(Session s) : session(std::move(s)) {}
    std::mutex mutex;
    Session session;
  };

  std::filesystem::path session_path(const std::string& id) const { return config_.store_dir / (id + ".json"); }

  static bool valid_id(const std::string& id) {
    return !id.empty() && id.size() <= 64 &&
           std::all_of(id.begin(), id.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
  }

  std::string new_id() {
    static const char* hex = "0123456789abcdef";
    std::string id;
    for (int i = 0; i < 16; ++i) id += hex[uniform_index(id_rng_, 16)];
    return id;
  }

  std::shared_ptr<Slot> find(const std::string& id) {
    if (!valid_id(id)) throw Error(ErrorCode::not_found, "no session '" + id + "'");
    std::lock_guard lock(map_mutex_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    std::ifstream f(session_path(id));
    if (!f) throw Error(ErrorCode::not_found, "no session '" + id + "'");
    std::shared_ptr<Slot> slot;
    try {
      slot = std::make_shared<Slot>(session_from_json(json::parse(f)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::io_error, "corrupt session file for '" + id + "': " + e.what());
    }
    sessions_[id] = slot;
    return slot;
  }

  void persist(const Session& s) {
    const auto path = session_path(s.id);
    const auto tmp = path.string() + ".tmp";
    write_file(tmp, session_to_json(s).dump());
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot store session " + s.id);
  }

  SessionBundle load_bundle(const std::string& robot, Condition c, std::uint64_t seed) {
    const auto path = config_.store_dir / "bundles" /
                      (robot + "_" + std::string(to_string(c)) + "_" + std::to_string(seed) + ".json");
    std::lock_guard lock(bundle_mutex_);
    if (std::ifstream f(path); f) {
      try {
        return bundle_from_json(json::parse(f));
      } catch (const std::exception&) {
        // regenerate below
      }
    }
    SessionBundle b = export_session(robot, c, config_.experiment, seed, kStudyDemos);
    write_file(path, to_json(b).dump());
    return b;
  }

  StudyConfig config_;
  std::mutex map_mutex_;
  std::mutex bundle_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Slot>> sessions_;
  Rng id_rng_{std::random_device{}()};
};

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::not_found: return 404;
    case ErrorCode::wrong_phase:
    case ErrorCode::conflict: return 409;
    case ErrorCode::invalid_argument:
    case ErrorCode::dimension_mismatch:
    case ErrorCode::out_of_bounds:
    case ErrorCode::unsupported_arm:
    case ErrorCode::unreachable_target: return 400;
    default: return 500;
  }
}

namespace detail {

inline void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  send_json(res, {{"error", code}, {"message", message}}, status);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_error(res, http_status(e.code()), to_string(e.code()), e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, "invalid_argument", std::string("malformed request body: ") + e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, "internal", e.what());
  }
}

}  // namespace detail

/// Registers the study routes on `server`. When `static_dir` is non-empty it
/// is mounted at "/" for the browser UI.
inline void register_routes(httplib::Server& server, StudyService& service, const std::string& static_dir = {}) {
  using httplib::Request;
  using httplib::Response;

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const Request&, Response& res) { res.status = 204; });

  server.Get("/robots", [&service](const Request&, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, service.robots()); });
  });

  server.Post("/sessions", [&service](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const json body = req.body.empty() ? json::object() : json::parse(req.body);
      const auto robot = body.value("robot", std::string("A"));
      const auto condition = body.value("condition", std::string("belief"));
      const auto seed = body.value("seed", std::uint64_t{0});
      detail::send_json(res, service.create_session(robot, condition, seed), 201);
    });
  });

  server.Get(R"(/sessions/([A-Za-z0-9]+))", [&service](const Request& req, Response& res) {
    detail::guarded(res, [&] { detail::send_json(res, service.get_session(req.matches[1])); });
  });

  server.Post(R"(/sessions/([A-Za-z0-9]+)/reachability)", [&service](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const json body = json::parse(req.body);
      std::vector<std::size_t> selection;
      for (const auto& v : body.at("selected")) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          throw Error(ErrorCode::out_of_bounds, "selected indices must be non-negative integers");
        }
        selection.push_back(v.get<std::size_t>());
      }
      detail::send_json(res, service.submit_reachability(req.matches[1], selection));
    });
  });

  server.Post(R"(/sessions/([A-Za-z0-9]+)/pick)", [&service](const Request& req, Response& res) {
    detail::guarded(res, [&] {
      const json body = json::parse(req.body);
      const auto& obj = body.at("object");
      if (!obj.is_number_integer() || obj.get<long long>() < 0) {
        throw Error(ErrorCode::out_of_bounds, "object must be a non-negative integer id");
      }
      detail::send_json(res, service.collab_pick(req.matches[1], obj.get<std::size_t>()));
    });
  });

  if (!static_dir.empty() && !server.set_mount_point("/", static_dir)) {
    throw Error(ErrorCode::io_error, "cannot mount static directory " + static_dir);
  }
}

}  // namespace remp
