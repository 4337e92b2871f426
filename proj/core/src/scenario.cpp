#include "mcast/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "mcast/rng.hpp"

namespace mcast {

namespace {

using json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

template <typename T>
T parse_number(const std::string &text, const std::filesystem::path &path, int line) {
    T value{};
    const char *first = text.data();
    const char *last = text.data() + text.size();
    while (first < last && *first == ' ') ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\r')) --last;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || first == last)
        throw ConfigError({fmt::format("{}:{}: cannot parse '{}' as a number", path.string(), line, text)});
    return value;
}

std::vector<std::string> read_lines(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({fmt::format("cannot open {}", path.string())});
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &name) {
    const std::filesystem::path p(name);
    return p.is_absolute() || base.empty() ? p : base / p;
}

AgentConfig parse_agent(const json &j) {
    AgentConfig a;
    a.hidden = j.value("hidden", a.hidden);
    a.episodes = j.value("episodes", a.episodes);
    a.episode_length = j.value("episode_length", a.episode_length);
    a.batch_size = j.value("batch_size", a.batch_size);
    a.learning_rate = j.value("learning_rate", a.learning_rate);
    a.discount = j.value("discount", a.discount);
    a.epsilon_start = j.value("epsilon_start", a.epsilon_start);
    a.epsilon_decay = j.value("epsilon_decay", a.epsilon_decay);
    a.epsilon_final = j.value("epsilon_final", a.epsilon_final);
    a.replay_capacity = j.value("replay_capacity", a.replay_capacity);
    a.target_sync_steps = j.value("target_sync_steps", a.target_sync_steps);
    a.gradient_clip = j.value("gradient_clip", a.gradient_clip);
    a.seed = j.value("seed", a.seed);
    return a;
}

json agent_json(const AgentConfig &a) {
    return json{{"hidden", a.hidden},
                {"episodes", a.episodes},
                {"episode_length", a.episode_length},
                {"batch_size", a.batch_size},
                {"learning_rate", a.learning_rate},
                {"discount", a.discount},
                {"epsilon_start", a.epsilon_start},
                {"epsilon_decay", a.epsilon_decay},
                {"epsilon_final", a.epsilon_final},
                {"replay_capacity", a.replay_capacity},
                {"target_sync_steps", a.target_sync_steps},
                {"gradient_clip", a.gradient_clip},
                {"seed", a.seed}};
}

std::vector<std::string> agent_violations(const AgentConfig &a) {
    std::vector<std::string> out;
    if (a.hidden.empty() || std::any_of(a.hidden.begin(), a.hidden.end(), [](int h) { return h <= 0; }))
        out.emplace_back("agent hidden layers must be nonempty and positive");
    if (a.episodes < 1 || a.episode_length < 1 || a.batch_size < 1 || a.replay_capacity < a.batch_size)
        out.emplace_back("agent episodes, episode_length and batch_size must be >= 1 and replay_capacity >= batch_size");
    if (!(a.learning_rate > 0.0)) out.emplace_back("agent learning_rate must be positive");
    if (!(a.discount >= 0.0 && a.discount < 1.0)) out.emplace_back("agent discount must lie in [0, 1)");
    if (!(a.epsilon_final >= 0.0 && a.epsilon_start <= 1.0 && a.epsilon_final <= a.epsilon_start))
        out.emplace_back("agent epsilon schedule must satisfy 0 <= final <= start <= 1");
    if (!(a.epsilon_decay > 0.0 && a.epsilon_decay <= 1.0)) out.emplace_back("agent epsilon_decay must lie in (0, 1]");
    if (a.target_sync_steps < 1) out.emplace_back("agent target_sync_steps must be >= 1");
    return out;
}

std::vector<std::string> channel_violations(const ChannelModel &c) {
    std::vector<std::string> out;
    if (!(c.reference_gain > 0.0) || !(c.reference_distance_m > 0.0) || !(c.path_loss_exponent >= 0.0))
        out.emplace_back("channel reference gain and distance must be positive, exponent nonnegative");
    if (c.mobility && !(c.min_distance_m > 0.0 && c.min_distance_m < c.max_distance_m &&
                        c.speed_min_mps >= 0.0 && c.speed_min_mps <= c.speed_max_mps))
        out.emplace_back("mobility needs 0 < min_distance < max_distance and 0 <= speed_min <= speed_max");
    return out;
}

SystemResources parse_resources(const json &j) {
    SystemResources r;
    r.bandwidth_hz = j.value("bandwidth_hz", r.bandwidth_hz);
    r.computing_hz = j.value("computing_hz", r.computing_hz);
    r.cycles_per_mb = j.value("cycles_per_mb", r.cycles_per_mb);
    r.downlink_power_w = j.value("downlink_power_w", r.downlink_power_w);
    r.noise_power_w = j.value("noise_power_w", r.noise_power_w);
    r.slot_seconds = j.value("slot_seconds", r.slot_seconds);
    return r;
}

ChannelModel parse_channel(const json &j) {
    ChannelModel c;
    c.reference_gain = j.value("reference_gain", c.reference_gain);
    c.reference_distance_m = j.value("reference_distance_m", c.reference_distance_m);
    c.path_loss_exponent = j.value("path_loss_exponent", c.path_loss_exponent);
    c.fading = j.value("fading", c.fading);
    c.mobility = j.value("mobility", c.mobility);
    c.speed_min_mps = j.value("speed_min_mps", c.speed_min_mps);
    c.speed_max_mps = j.value("speed_max_mps", c.speed_max_mps);
    c.min_distance_m = j.value("min_distance_m", c.min_distance_m);
    c.max_distance_m = j.value("max_distance_m", c.max_distance_m);
    return c;
}

std::vector<Video> parse_inline_videos(const json &videos) {
    std::vector<Video> out;
    for (const auto &v : videos) {
        Video video;
        for (const auto &s : v.at("segments"))
            video.segments.push_back({s.at("swipe_prob").get<double>(), s.at("layer_mb").get<std::vector<double>>()});
        out.push_back(std::move(video));
    }
    return out;
}

SyntheticCatalogSpec parse_synthetic(const json &j, double segment_seconds) {
    SyntheticCatalogSpec s;
    s.videos = j.value("videos", s.videos);
    s.min_segments = j.value("min_segments", s.min_segments);
    s.max_segments = j.value("max_segments", s.max_segments);
    s.mean_swipe = j.value("mean_swipe", s.mean_swipe);
    s.swipe_spread = j.value("swipe_spread", s.swipe_spread);
    s.layer_mb = j.value("layer_mb", s.layer_mb);
    s.size_jitter = j.value("size_jitter", s.size_jitter);
    s.segment_seconds = segment_seconds;
    s.seed = j.value("seed", s.seed);
    return s;
}

}  // namespace

std::vector<Video> generate_catalog(const SyntheticCatalogSpec &spec) {
    if (spec.videos < 1 || spec.min_segments < 1 || spec.max_segments < spec.min_segments || spec.layer_mb.empty())
        throw ConfigError({"synthetic catalog needs videos >= 1, 1 <= min_segments <= max_segments and layers"});
    if (!(spec.size_jitter >= 0.0 && spec.size_jitter < 1.0) || !(spec.swipe_spread >= 0.0))
        throw ConfigError({"synthetic catalog jitter must lie in [0, 1) and spread must be nonnegative"});
    Rng rng(mix_seed(spec.seed, 100));
    std::vector<Video> videos(static_cast<std::size_t>(spec.videos));
    const auto span = static_cast<std::uint64_t>(spec.max_segments - spec.min_segments + 1);
    for (auto &video : videos) {
        const int count = spec.min_segments + static_cast<int>(uniform_index(rng, span));
        const double hazard = std::clamp(
            spec.mean_swipe * uniform(rng, 1.0 - spec.swipe_spread, 1.0 + spec.swipe_spread), 0.0, 1.0);
        for (int j = 0; j < count; ++j) {
            Segment seg;
            seg.swipe_prob = hazard;
            for (double z : spec.layer_mb) seg.layer_mb.push_back(z * uniform(rng, 1.0 - spec.size_jitter, 1.0 + spec.size_jitter));
            video.segments.push_back(std::move(seg));
        }
    }
    return videos;
}

std::vector<std::string> validate_config(const std::vector<Video> &videos, double segment_seconds,
                                         std::span<const UserSpec> users, std::span<const SmgSpec> smgs,
                                         const SystemResources &res) {
    auto out = VideoCatalog::check(videos, segment_seconds);
    for (auto &v : res.violations()) out.push_back(std::move(v));

    std::set<int> known;
    for (const auto &u : users) {
        if (!known.insert(u.id).second) out.push_back(fmt::format("user {} is listed twice", u.id));
        if (!(u.distance_m > 0.0)) out.push_back(fmt::format("user {} has a nonpositive distance {}", u.id, u.distance_m));
    }
    if (smgs.empty()) out.emplace_back("scenario has no SMGs");
    std::map<int, std::size_t> owner;
    for (std::size_t g = 0; g < smgs.size(); ++g) {
        const auto &smg = smgs[g];
        if (smg.users.empty()) out.push_back(fmt::format("empty SMG {}: no member users", g + 1));
        for (int u : smg.users) {
            if (!known.contains(u)) out.push_back(fmt::format("SMG {} references unknown user {}", g + 1, u));
            const auto [it, inserted] = owner.emplace(u, g);
            if (!inserted)
                out.push_back(fmt::format("duplicate membership: user {} is in SMG {} and SMG {}", u, it->second + 1, g + 1));
        }
        if (!(smg.lambda_rebuffer >= 0.0) || !(smg.lambda_variation >= 0.0))
            out.push_back(fmt::format("SMG {} has a negative sensitivity", g + 1));
        if (smg.start_video < 0 || smg.start_video >= static_cast<int>(videos.size()))
            out.push_back(fmt::format("SMG {} starts at video {} outside the catalog", g + 1, smg.start_video + 1));
    }
    return out;
}

std::vector<std::string> Scenario::violations() const {
    auto out = validate_config(catalog.videos(), catalog.segment_seconds(), users, smgs, resources);
    if (horizon < 1) out.push_back(fmt::format("horizon must be >= 1, got {}", horizon));
    if (n_max < 1) out.push_back(fmt::format("n_max must be >= 1, got {}", n_max));
    for (auto &v : channel_violations(channel)) out.push_back(std::move(v));
    for (auto &v : agent_violations(agent)) out.push_back(std::move(v));
    if (trace) {
        if (trace->slots.empty()) out.emplace_back("channel trace has no slots");
        for (std::size_t t = 0; t < trace->slots.size(); ++t) {
            for (const auto &u : users)
                if (!trace->slots[t].contains(u.id))
                    out.push_back(fmt::format("channel trace slot {} has no gain for user {}", t, u.id));
            for (const auto &[id, gain] : trace->slots[t])
                if (!(gain >= 0.0)) out.push_back(fmt::format("channel trace slot {} user {} has negative gain", t, id));
        }
    }
    return out;
}

Scenario parse_scenario(std::string_view json_text, const std::filesystem::path &base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception &e) {
        throw ConfigError({fmt::format("malformed JSON: {}", e.what())});
    }

    Scenario s;
    std::vector<Video> videos;
    double segment_seconds = 2.0;
    try {
        s.horizon = j.value("horizon", s.horizon);
        s.n_max = j.value("n_max", s.n_max);
        s.seed = j.value("seed", s.seed);
        if (j.contains("resources")) s.resources = parse_resources(j.at("resources"));
        if (j.contains("channel")) {
            const auto &c = j.at("channel");
            s.channel = parse_channel(c);
            if (c.contains("trace")) s.trace = read_channel_trace(resolve(base_dir, c.at("trace").get<std::string>()));
            if (c.contains("trace_rows")) {
                ChannelTrace trace;
                for (const auto &row : c.at("trace_rows")) {
                    const auto slot = row.at(0).get<std::size_t>();
                    if (slot >= trace.slots.size()) trace.slots.resize(slot + 1);
                    trace.slots[slot][row.at(1).get<int>()] = row.at(2).get<double>();
                }
                s.trace = std::move(trace);
            }
        }
        if (j.contains("agent")) s.agent = parse_agent(j.at("agent"));

        const auto &cat = j.at("catalog");
        segment_seconds = cat.value("segment_seconds", segment_seconds);
        if (cat.contains("videos"))
            videos = parse_inline_videos(cat.at("videos"));
        else if (cat.contains("csv"))
            videos = read_catalog_csv(resolve(base_dir, cat.at("csv").get<std::string>()));
        else if (cat.contains("synthetic"))
            videos = generate_catalog(parse_synthetic(cat.at("synthetic"), segment_seconds));
        else
            throw ConfigError({"catalog needs one of 'videos', 'csv' or 'synthetic'"});

        for (const auto &u : j.at("users")) s.users.push_back({u.at("id").get<int>(), u.value("distance_m", 100.0)});
        for (const auto &g : j.at("smgs")) {
            SmgSpec smg;
            smg.users = g.at("users").get<std::vector<int>>();
            smg.lambda_rebuffer = g.value("lambda_rebuffer", smg.lambda_rebuffer);
            smg.lambda_variation = g.value("lambda_variation", smg.lambda_variation);
            smg.start_video = g.value("start_video", smg.start_video);
            s.smgs.push_back(std::move(smg));
        }
    } catch (const json::exception &e) {
        throw ConfigError({fmt::format("scenario schema error: {}", e.what())});
    }

    auto problems = validate_config(videos, segment_seconds, s.users, s.smgs, s.resources);
    if (!problems.empty()) throw ConfigError(std::move(problems));
    s.catalog = VideoCatalog(std::move(videos), segment_seconds);
    problems = s.violations();
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw ConfigError({fmt::format("cannot open scenario {}", path.string())});
    std::stringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), path.parent_path());
}

std::string serialize_scenario(const Scenario &s) {
    json videos = json::array();
    for (const auto &v : s.catalog.videos()) {
        json segments = json::array();
        for (const auto &seg : v.segments) segments.push_back({{"swipe_prob", seg.swipe_prob}, {"layer_mb", seg.layer_mb}});
        videos.push_back({{"segments", std::move(segments)}});
    }
    json users = json::array();
    for (const auto &u : s.users) users.push_back({{"id", u.id}, {"distance_m", u.distance_m}});
    json smgs = json::array();
    for (const auto &g : s.smgs)
        smgs.push_back({{"users", g.users},
                        {"lambda_rebuffer", g.lambda_rebuffer},
                        {"lambda_variation", g.lambda_variation},
                        {"start_video", g.start_video}});
    const auto &r = s.resources;
    const auto &c = s.channel;
    json channel{{"reference_gain", c.reference_gain},
                 {"reference_distance_m", c.reference_distance_m},
                 {"path_loss_exponent", c.path_loss_exponent},
                 {"fading", c.fading},
                 {"mobility", c.mobility},
                 {"speed_min_mps", c.speed_min_mps},
                 {"speed_max_mps", c.speed_max_mps},
                 {"min_distance_m", c.min_distance_m},
                 {"max_distance_m", c.max_distance_m}};
    if (s.trace) {
        json rows = json::array();
        for (std::size_t t = 0; t < s.trace->slots.size(); ++t)
            for (const auto &[id, gain] : s.trace->slots[t]) rows.push_back(json::array({t, id, gain}));
        channel["trace_rows"] = std::move(rows);
    }
    json out{{"seed", s.seed},
             {"horizon", s.horizon},
             {"n_max", s.n_max},
             {"resources",
              {{"bandwidth_hz", r.bandwidth_hz},
               {"computing_hz", r.computing_hz},
               {"cycles_per_mb", r.cycles_per_mb},
               {"downlink_power_w", r.downlink_power_w},
               {"noise_power_w", r.noise_power_w},
               {"slot_seconds", r.slot_seconds}}},
             {"catalog", {{"segment_seconds", s.catalog.segment_seconds()}, {"videos", std::move(videos)}}},
             {"users", std::move(users)},
             {"smgs", std::move(smgs)},
             {"channel", std::move(channel)},
             {"agent", agent_json(s.agent)}};
    return out.dump(2);
}

std::vector<Video> read_catalog_csv(const std::filesystem::path &path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ConfigError({fmt::format("{} is empty", path.string())});
    const auto header = split_csv_line(lines.front());
    if (header.size() < 4 || header[0] != "video_id" || header[1] != "segment_id" || header[2] != "swipe_prob")
        throw ConfigError({fmt::format("{}: header must be video_id,segment_id,swipe_prob,layer1_mb,...", path.string())});
    const std::size_t layers = header.size() - 3;
    for (std::size_t l = 0; l < layers; ++l)
        if (header[3 + l] != fmt::format("layer{}_mb", l + 1))
            throw ConfigError({fmt::format("{}: column {} must be layer{}_mb", path.string(), 4 + l, l + 1)});

    std::vector<Video> videos;
    std::vector<std::string> problems;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const int line_no = static_cast<int>(n + 1);
        const auto f = split_csv_line(lines[n]);
        if (f.size() != header.size()) {
            problems.push_back(fmt::format("{}:{}: expected {} fields, got {}", path.string(), line_no, header.size(), f.size()));
            continue;
        }
        const int video = parse_number<int>(f[0], path, line_no);
        const int segment = parse_number<int>(f[1], path, line_no);
        if (video == static_cast<int>(videos.size()) + 1) videos.emplace_back();
        if (videos.empty() || video != static_cast<int>(videos.size()) ||
            segment != static_cast<int>(videos.back().segments.size()) + 1) {
            problems.push_back(fmt::format("{}:{}: ids must be 1-based and contiguous, got video {} segment {}",
                                           path.string(), line_no, video, segment));
            continue;
        }
        Segment seg;
        seg.swipe_prob = parse_number<double>(f[2], path, line_no);
        for (std::size_t l = 0; l < layers; ++l) seg.layer_mb.push_back(parse_number<double>(f[3 + l], path, line_no));
        videos.back().segments.push_back(std::move(seg));
    }
    if (!problems.empty()) throw ConfigError(std::move(problems));
    return videos;
}

void write_catalog_csv(const std::filesystem::path &path, const VideoCatalog &catalog) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << "video_id,segment_id,swipe_prob";
    for (int l = 1; l <= catalog.layer_count(); ++l) out << fmt::format(",layer{}_mb", l);
    out << '\n';
    for (int i = 0; i < catalog.video_count(); ++i) {
        for (int j = 0; j < catalog.segment_count(i); ++j) {
            const auto &seg = catalog.segment({i, j});
            out << fmt::format("{},{},{}", i + 1, j + 1, seg.swipe_prob);
            for (double z : seg.layer_mb) out << fmt::format(",{}", z);
            out << '\n';
        }
    }
}

ChannelTrace read_channel_trace(const std::filesystem::path &path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines.front() != "slot,user_id,gain")
        throw ConfigError({fmt::format("{}: header must be slot,user_id,gain", path.string())});
    ChannelTrace trace;
    for (std::size_t n = 1; n < lines.size(); ++n) {
        if (lines[n].empty()) continue;
        const int line_no = static_cast<int>(n + 1);
        const auto f = split_csv_line(lines[n]);
        if (f.size() != 3) throw ConfigError({fmt::format("{}:{}: expected 3 fields", path.string(), line_no)});
        const auto slot = parse_number<int>(f[0], path, line_no);
        if (slot < 0 || slot > static_cast<int>(trace.slots.size()))
            throw ConfigError({fmt::format("{}:{}: slots must start at 0 and be contiguous", path.string(), line_no)});
        if (slot == static_cast<int>(trace.slots.size())) trace.slots.emplace_back();
        trace.slots[slot][parse_number<int>(f[1], path, line_no)] = parse_number<double>(f[2], path, line_no);
    }
    return trace;
}

void write_channel_trace(const std::filesystem::path &path, const ChannelTrace &trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    out << "slot,user_id,gain\n";
    for (std::size_t t = 0; t < trace.slots.size(); ++t)
        for (const auto &[id, gain] : trace.slots[t]) out << fmt::format("{},{},{}\n", t, id, gain);
}

}  // namespace mcast
