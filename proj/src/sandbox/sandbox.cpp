#include "forge/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>

#include <spdlog/spdlog.h>

#include "forge/resources.hpp"

namespace forge::sandbox {

namespace fs = std::filesystem;

std::string_view to_string(ExecStatus status) {
    switch (status) {
        case ExecStatus::Success: return "Success";
        case ExecStatus::NonZeroExit: return "NonZeroExit";
        case ExecStatus::NoArtifact: return "NoArtifact";
        case ExecStatus::Timeout: return "Timeout";
        case ExecStatus::LaunchFailure: return "LaunchFailure";
    }
    return "LaunchFailure";
}

ExecStatus exec_status_from_string(std::string_view name) {
    for (auto s : {ExecStatus::Success, ExecStatus::NonZeroExit, ExecStatus::NoArtifact,
                   ExecStatus::Timeout, ExecStatus::LaunchFailure}) {
        if (to_string(s) == name) return s;
    }
    throw Error(ErrorKind::ParseFailure, "unknown execution status '" + std::string(name) + "'");
}

std::size_t TraceLog::count(std::string_view kind) const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(),
                                                  [&](const TraceEntry& e) { return e.kind == kind; }));
}

std::map<std::string, std::size_t> TraceLog::histogram() const {
    std::map<std::string, std::size_t> h;
    for (const auto& e : entries) ++h[e.kind];
    return h;
}

std::vector<std::string> ExecutionResult::artifact_names() const {
    std::vector<std::string> names;
    names.reserve(artifacts.size());
    for (const auto& a : artifacts) names.push_back(a.name);
    return names;
}

const std::string& ExecutionResult::primary_image() const {
    static const std::string kEmpty;
    return artifacts.empty() ? kEmpty : artifacts.front().bytes;
}

std::string ExecutionResult::failure_message() const {
    switch (status) {
        case ExecStatus::Success: return {};
        case ExecStatus::Timeout:
            return "Execution timed out after " + std::to_string(static_cast<long long>(wall_time_ms)) + " ms.";
        case ExecStatus::NoArtifact:
            return "The script exited normally but did not produce an image file. "
                   "Save the figure (e.g. plt.savefig) or call plt.show().";
        case ExecStatus::LaunchFailure:
        case ExecStatus::NonZeroExit: {
            std::string msg = trim(stderr_text);
            if (msg.empty()) msg = "Process exited with code " + std::to_string(exit_code.value_or(-1));
            return msg;
        }
    }
    return {};
}

json to_json(const ExecutionResult& r) {
    json j;
    j["status"] = std::string(to_string(r.status));
    j["exit_code"] = r.exit_code ? json(*r.exit_code) : json(nullptr);
    if (r.term_signal) j["term_signal"] = *r.term_signal;
    j["wall_time_ms"] = r.wall_time_ms;
    j["stdout"] = r.stdout_text;
    j["stderr"] = r.stderr_text;
    j["artifacts"] = r.artifact_names();
    if (r.trace) {
        json entries = json::array();
        for (const auto& e : r.trace->entries) entries.push_back(e.attributes);
        j["trace"] = {{"entries", entries}, {"histogram", r.trace->histogram()}};
    } else {
        j["trace"] = nullptr;
    }
    return j;
}

EnvManifest env_manifest_from_json(const json& j) {
    EnvManifest m;
    m.id = j.at("id").get<std::string>();
    m.interpreter = j.value("interpreter", std::string("python3"));
    if (j.contains("packages")) m.packages = j.at("packages").get<std::map<std::string, std::string>>();
    if (j.contains("env")) m.env = j.at("env").get<std::map<std::string, std::string>>();
    return m;
}

json to_json(const EnvManifest& m) {
    return {{"id", m.id}, {"interpreter", m.interpreter}, {"packages", m.packages}, {"env", m.env}};
}

bool is_image_file_name(std::string_view name) {
    const auto dot = name.rfind('.');
    if (dot == std::string_view::npos) return false;
    const std::string ext = to_lower(name.substr(dot + 1));
    static const char* kExts[] = {"png", "jpg", "jpeg", "gif", "bmp", "svg", "tif", "tiff", "webp", "pdf", "eps"};
    return std::any_of(std::begin(kExts), std::end(kExts), [&](const char* e) { return ext == e; });
}

namespace {

EnvManifest default_manifest() {
    EnvManifest m;
    m.id = "default";
    m.interpreter = "python3";
    m.packages = {{"matplotlib", "*"}, {"numpy", "*"}, {"scipy", "*"}, {"pandas", "*"}};
    return m;
}

std::optional<std::string> resolve_interpreter(const std::string& name) {
    auto executable = [](const fs::path& p) { return ::access(p.c_str(), X_OK) == 0 && fs::is_regular_file(p); };
    if (name.find('/') != std::string::npos) {
        if (executable(name)) return name;
        return std::nullopt;
    }
    const char* path = std::getenv("PATH");
    std::string_view dirs = path ? path : "/usr/local/bin:/usr/bin:/bin";
    while (!dirs.empty()) {
        const auto colon = dirs.find(':');
        const std::string dir(dirs.substr(0, colon));
        if (!dir.empty() && executable(fs::path(dir) / name)) return (fs::path(dir) / name).string();
        if (colon == std::string_view::npos) break;
        dirs.remove_prefix(colon + 1);
    }
    return std::nullopt;
}

struct CappedBuffer {
    std::string data;
    std::size_t dropped = 0;
    std::size_t cap;

    explicit CappedBuffer(std::size_t c) : cap(c) {}

    void append(const char* src, std::size_t n) {
        const std::size_t room = data.size() < cap ? cap - data.size() : 0;
        const std::size_t take = std::min(room, n);
        data.append(src, take);
        dropped += n - take;
    }

    std::string finish() && {
        if (dropped > 0) data += "\n[forge: output truncated, " + std::to_string(dropped) + " bytes dropped]\n";
        return std::move(data);
    }
};

void set_nonblocking(int fd) {
    const int flags = ::fcntl(fd, F_GETFL, 0);
    ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

// Reads whatever is available; returns false once the fd hit EOF.
bool drain(int fd, CappedBuffer& buf) {
    char chunk[65536];
    for (;;) {
        const ssize_t n = ::read(fd, chunk, sizeof chunk);
        if (n > 0) {
            buf.append(chunk, static_cast<std::size_t>(n));
            continue;
        }
        if (n == 0) return false;
        if (errno == EINTR) continue;
        return true;  // EAGAIN
    }
}

std::string make_temp_dir(const fs::path& parent, const std::string& prefix) {
    fs::create_directories(parent);
    std::string tmpl = (parent / (prefix + "XXXXXX")).string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
        throw Error(ErrorKind::Io, "mkdtemp failed under " + parent.string() + ": " + std::strerror(errno));
    }
    return tmpl;
}

std::vector<Artifact> collect_artifacts(const fs::path& workdir, const fs::path& script) {
    std::vector<Artifact> out;
    std::error_code ec;
    for (auto it = fs::recursive_directory_iterator(workdir, fs::directory_options::skip_permission_denied, ec);
         it != fs::recursive_directory_iterator(); it.increment(ec)) {
        if (ec) break;
        if (!it->is_regular_file(ec) || it->path() == script) continue;
        const std::string rel = fs::relative(it->path(), workdir).generic_string();
        if (rel.rfind(".", 0) == 0) continue;
        if (!is_image_file_name(rel)) continue;
        out.push_back({rel, read_file(it->path())});
    }
    std::sort(out.begin(), out.end(), [](const Artifact& a, const Artifact& b) { return a.name < b.name; });
    return out;
}

TraceLog parse_trace(const fs::path& path, bool& attached, std::string& failure) {
    TraceLog log;
    attached = false;
    if (!fs::exists(path)) {
        failure = "tracer produced no side-channel file";
        return log;
    }
    log.raw = read_file(path);
    for (const auto& line : split_lines(log.raw)) {
        if (trim(line).empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::parse_error&) {
            continue;  // a guest killed mid-write can leave a partial last line
        }
        const std::string kind = rec.value("kind", std::string());
        if (kind == "__tracer__") {
            attached = rec.value("status", std::string()) == "attached";
            if (!attached) failure = rec.value("reason", std::string("tracer failed to attach"));
            continue;
        }
        if (kind.empty() || kind.rfind("__", 0) == 0) continue;
        log.entries.push_back({kind, std::move(rec)});
    }
    if (!attached && failure.empty()) failure = "tracer never reported attachment";
    return log;
}

}  // namespace

Sandbox::Sandbox(SandboxConfig config) : config_(std::move(config)) {
    if (config_.scratch_root.empty()) {
        scratch_root_ = make_temp_dir(fs::temp_directory_path(), "forge-sandbox-");
        owns_scratch_ = true;
    } else {
        scratch_root_ = config_.scratch_root;
        fs::create_directories(scratch_root_);
    }
    boot_script_ = scratch_root_ / "forge_boot.py";
    write_file(boot_script_, resources::get("guest/boot.py"));
    mpl_cache_ = fs::temp_directory_path() / "forge-mplcache";
    fs::create_directories(mpl_cache_);
    for (auto& m : config_.manifests) manifests_.emplace(m.id, m);
    if (!manifests_.count("default")) manifests_.emplace("default", default_manifest());
}

Sandbox::~Sandbox() {
    if (owns_scratch_ && !config_.keep_workdirs) {
        std::error_code ec;
        fs::remove_all(scratch_root_, ec);
    }
}

const EnvManifest* Sandbox::find_manifest(std::string_view id) const {
    std::lock_guard lock(mu_);
    auto it = manifests_.find(id);
    return it == manifests_.end() ? nullptr : &it->second;
}

void Sandbox::add_manifest(EnvManifest manifest) {
    std::lock_guard lock(mu_);
    auto id = manifest.id;
    manifests_.insert_or_assign(std::move(id), std::move(manifest));
}

void Sandbox::load_manifests(const fs::path& dir) {
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() != ".json") continue;
        add_manifest(env_manifest_from_json(json::parse(read_file(entry.path()))));
    }
}

std::size_t Sandbox::runs_started() const { return runs_.load(); }

ExecutionResult Sandbox::execute(const ExecutionRequest& req) const { return run(req, false); }

ExecutionResult Sandbox::trace_execute(const ExecutionRequest& req) const {
    if (!req.trace_enabled) {
        throw Error(ErrorKind::PreconditionViolation, "trace_execute requires trace_enabled=true");
    }
    return run(req, true);
}

ExecutionResult Sandbox::run(const ExecutionRequest& req, bool trace) const {
    if (req.timeout.count() <= 0) throw Error(ErrorKind::PreconditionViolation, "timeout must be positive");
    ++runs_;

    ExecutionResult result;
    const auto started = std::chrono::steady_clock::now();
    auto elapsed_ms = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    };

    const EnvManifest* manifest = find_manifest(req.env_manifest_id);
    if (manifest == nullptr) {
        result.status = ExecStatus::LaunchFailure;
        result.stderr_text = "unknown environment manifest '" + req.env_manifest_id + "'";
        return result;
    }
    const auto interpreter = resolve_interpreter(manifest->interpreter);
    if (!interpreter) {
        result.status = ExecStatus::LaunchFailure;
        result.stderr_text = "interpreter '" + manifest->interpreter + "' not found";
        return result;
    }

    const fs::path workdir = make_temp_dir(scratch_root_, "run-");
    const fs::path script = workdir / "run.py";
    const fs::path trace_file = workdir.string() + ".trace.jsonl";
    write_file(script, req.guest_script);

    // Everything the child needs is materialized before fork().
    std::vector<std::string> env_strings;
    const char* parent_path = std::getenv("PATH");
    env_strings.push_back(std::string("PATH=") + (parent_path ? parent_path : "/usr/local/bin:/usr/bin:/bin"));
    env_strings.push_back("HOME=" + workdir.string());
    env_strings.push_back("MPLBACKEND=Agg");
    env_strings.push_back("MPLCONFIGDIR=" + mpl_cache_.string());
    env_strings.push_back("PYTHONHASHSEED=0");
    env_strings.push_back("PYTHONDONTWRITEBYTECODE=1");
    env_strings.push_back("PYTHONUNBUFFERED=1");
    env_strings.push_back("OPENBLAS_NUM_THREADS=1");
    env_strings.push_back("OMP_NUM_THREADS=1");
    env_strings.push_back("MKL_NUM_THREADS=1");
    env_strings.push_back("LANG=C.UTF-8");
    if (trace) env_strings.push_back("FORGE_TRACE_FILE=" + trace_file.string());
    if (config_.isolate_network) env_strings.push_back("FORGE_NO_NETWORK=1");
    for (const auto& [k, v] : manifest->env) env_strings.push_back(k + "=" + v);
    std::vector<char*> envp;
    for (auto& s : env_strings) envp.push_back(s.data());
    envp.push_back(nullptr);

    std::string interp = *interpreter;
    std::string boot = boot_script_.string();
    std::string script_name = "run.py";
    std::vector<char*> argv = {interp.data(), boot.data(), script_name.data(), nullptr};
    const std::string workdir_str = workdir.string();

    int out_pipe[2], err_pipe[2], exec_pipe[2];
    if (::pipe2(out_pipe, O_CLOEXEC) != 0 || ::pipe2(err_pipe, O_CLOEXEC) != 0 ||
        ::pipe2(exec_pipe, O_CLOEXEC) != 0) {
        throw Error(ErrorKind::Io, std::string("pipe failed: ") + std::strerror(errno));
    }

    rlimit mem{};
    mem.rlim_cur = mem.rlim_max = config_.memory_limit_bytes;
    rlimit no_core{};
    const bool isolate_net = config_.isolate_network;

    const pid_t pid = ::fork();
    if (pid < 0) throw Error(ErrorKind::Io, std::string("fork failed: ") + std::strerror(errno));
    if (pid == 0) {
        ::setpgid(0, 0);
        ::dup2(out_pipe[1], STDOUT_FILENO);
        ::dup2(err_pipe[1], STDERR_FILENO);
        const int devnull = ::open("/dev/null", O_RDONLY);
        if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
        if (::chdir(workdir_str.c_str()) != 0) {
            const int e = errno;
            (void)!::write(exec_pipe[1], &e, sizeof e);
            ::_exit(127);
        }
        if (isolate_net) {
            if (::unshare(CLONE_NEWNET) != 0) (void)::unshare(CLONE_NEWUSER | CLONE_NEWNET);
        }
        if (mem.rlim_cur > 0) ::setrlimit(RLIMIT_AS, &mem);
        ::setrlimit(RLIMIT_CORE, &no_core);
        ::execve(argv[0], argv.data(), envp.data());
        const int e = errno;
        (void)!::write(exec_pipe[1], &e, sizeof e);
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(out_pipe[1]);
    ::close(err_pipe[1]);
    ::close(exec_pipe[1]);

    int exec_errno = 0;
    const ssize_t got = ::read(exec_pipe[0], &exec_errno, sizeof exec_errno);
    ::close(exec_pipe[0]);
    if (got == static_cast<ssize_t>(sizeof exec_errno)) {
        int st = 0;
        ::waitpid(pid, &st, 0);
        ::close(out_pipe[0]);
        ::close(err_pipe[0]);
        result.status = ExecStatus::LaunchFailure;
        result.stderr_text = std::string("failed to launch interpreter: ") + std::strerror(exec_errno);
        result.wall_time_ms = elapsed_ms();
        if (!config_.keep_workdirs) {
            std::error_code ec;
            fs::remove_all(workdir, ec);
        }
        return result;
    }

    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);
    CappedBuffer out(config_.output_cap_bytes), err(config_.output_cap_bytes);
    bool out_open = true, err_open = true, exited = false, timed_out = false;
    int wait_status = 0;
    const auto deadline = started + req.timeout;

    while (!exited) {
        const auto now = std::chrono::steady_clock::now();
        if (now >= deadline) {
            ::kill(-pid, SIGKILL);
            ::waitpid(pid, &wait_status, 0);
            timed_out = true;
            break;
        }
        const auto remaining = std::chrono::duration_cast<Millis>(deadline - now).count();
        pollfd fds[2];
        nfds_t nfds = 0;
        if (out_open) fds[nfds++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nfds++] = {err_pipe[0], POLLIN, 0};
        const int wait_ms = static_cast<int>(std::clamp<long long>(remaining, 1, 50));
        if (nfds > 0) {
            ::poll(fds, nfds, wait_ms);
        } else {
            ::usleep(static_cast<useconds_t>(wait_ms) * 1000);
        }
        if (out_open) out_open = drain(out_pipe[0], out);
        if (err_open) err_open = drain(err_pipe[0], err);
        const pid_t w = ::waitpid(pid, &wait_status, WNOHANG);
        if (w == pid) exited = true;
    }
    // Reap anything the guest left behind in its process group.
    ::kill(-pid, SIGKILL);
    if (out_open) drain(out_pipe[0], out);
    if (err_open) drain(err_pipe[0], err);
    ::close(out_pipe[0]);
    ::close(err_pipe[0]);
    result.wall_time_ms = elapsed_ms();
    result.stdout_text = std::move(out).finish();
    result.stderr_text = std::move(err).finish();

    if (timed_out) {
        result.status = ExecStatus::Timeout;
        result.term_signal = SIGKILL;
    } else if (WIFSIGNALED(wait_status)) {
        result.status = ExecStatus::NonZeroExit;
        result.term_signal = WTERMSIG(wait_status);
    } else {
        result.exit_code = WEXITSTATUS(wait_status);
        result.status = *result.exit_code == 0 ? ExecStatus::Success : ExecStatus::NonZeroExit;
    }
    if (!timed_out) {
        result.artifacts = collect_artifacts(workdir, script);
        if (result.status == ExecStatus::Success && result.artifacts.empty()) result.status = ExecStatus::NoArtifact;
    }

    std::optional<Error> trace_error;
    if (trace) {
        bool attached = false;
        std::string failure;
        TraceLog log = parse_trace(trace_file, attached, failure);
        if (attached) {
            result.trace = std::move(log);
        } else {
            trace_error.emplace(ErrorKind::TraceUnavailable, failure);
        }
    }
    if (!config_.keep_workdirs) {
        std::error_code ec;
        fs::remove_all(workdir, ec);
        fs::remove(trace_file, ec);
    }
    if (trace_error) throw *trace_error;
    return result;
}

std::vector<std::string> extract_all_code_blocks(std::string_view response) {
    std::vector<std::string> blocks;
    const auto lines = split_lines(response);
    std::size_t i = 0;
    while (i < lines.size()) {
        const std::string opener = trim(lines[i]);
        if (opener.rfind("```", 0) != 0) {
            ++i;
            continue;
        }
        const std::string tag = trim(std::string_view(opener).substr(3));
        // Find the closing fence regardless of tag so unrelated blocks are skipped whole.
        std::size_t j = i + 1;
        while (j < lines.size() && trim(lines[j]) != "```") ++j;
        if (j >= lines.size()) break;
        if (tag == "python") {
            std::size_t b = i + 1, e = j;
            while (b < e && trim(lines[b]).empty()) ++b;
            while (e > b && trim(lines[e - 1]).empty()) --e;
            std::string body;
            for (std::size_t k = b; k < e; ++k) {
                body += lines[k];
                body += '\n';
            }
            blocks.push_back(std::move(body));
        }
        i = j + 1;
    }
    return blocks;
}

std::string extract_code_block(std::string_view response) {
    auto blocks = extract_all_code_blocks(response);
    if (blocks.empty()) throw Error(ErrorKind::NoCodeBlock, "response contains no ```python fenced block");
    return std::move(blocks.front());
}

}  // namespace forge::sandbox
