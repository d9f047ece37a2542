#include "forge/agent.hpp"

#include <spdlog/spdlog.h>

namespace forge::agent {

std::string repair(llm::Gateway& gateway, const std::string& code, const std::string& error_message) {
    if (trim(error_message).empty()) throw Error(ErrorKind::PreconditionViolation, "repair needs an error message");
    const std::string prompt = gateway.render("repair", {{"code", code}, {"error", error_message}});
    return sandbox::extract_code_block(gateway.complete(llm::tasks::kRepair, prompt).text);
}

RenderOutcome render_with_repair(llm::Gateway& gateway, const sandbox::Sandbox& sb, std::string code, int max_repairs,
                                 sandbox::Millis timeout, bool trace) {
    auto run = [&](const std::string& c) {
        sandbox::ExecutionRequest req;
        req.guest_script = c;
        req.timeout = timeout;
        req.trace_enabled = trace;
        if (trace) {
            try {
                return sb.trace_execute(req);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::TraceUnavailable) throw;
                req.trace_enabled = false;
            }
        }
        return sb.execute(req);
    };

    RenderOutcome out;
    out.code = std::move(code);
    out.result = run(out.code);
    while (!out.result.ok() && out.result.status != sandbox::ExecStatus::LaunchFailure && out.repairs < max_repairs) {
        RepairStep step;
        step.error = out.result.failure_message();
        ++out.repairs;
        try {
            std::string fixed = repair(gateway, out.code, step.error);
            step.result = "repaired";
            out.steps.push_back(step);
            out.code = std::move(fixed);
            out.result = run(out.code);
        } catch (const Error& e) {
            step.result = e.kind() == ErrorKind::NoCodeBlock ? "no_code_block" : e.what();
            out.steps.push_back(step);
        }
    }
    return out;
}

std::string_view to_string(AgentStatus s) {
    switch (s) {
        case AgentStatus::Running: return "Running";
        case AgentStatus::Converged: return "Converged";
        case AgentStatus::MaxIter: return "MaxIter";
        case AgentStatus::Abandoned: return "Abandoned";
    }
    return "Unknown";
}

json to_json(const IterationRecord& r) {
    json j = {{"iteration", r.iteration},
              {"rendered", r.rendered},
              {"repairs", r.repairs},
              {"score", r.score ? json(*r.score) : json(nullptr)},
              {"code_sha256", r.code_sha256},
              {"refined", r.refined}};
    if (!r.judge_response.empty()) j["judge_response"] = r.judge_response;
    if (!r.error.empty()) j["error"] = r.error;
    return j;
}

json to_json(const AgentState& s) {
    json iterations = json::array();
    for (const auto& r : s.transcript) iterations.push_back(to_json(r));
    return {{"status", to_string(s.status)},
            {"iteration", s.iteration},
            {"best_score", s.best_score ? json(*s.best_score) : json(nullptr)},
            {"best_code", s.best_code ? json(*s.best_code) : json(nullptr)},
            {"repair_count", s.repair_count},
            {"iterations", iterations}};
}

AgentState refine_loop(llm::Gateway& gateway, const sandbox::Sandbox& sb, const std::string& image,
                       const std::string& initial_code, const AgentConfig& config) {
    if (trim(initial_code).empty()) throw Error(ErrorKind::PreconditionViolation, "initial code is empty");
    if (config.max_iterations < 1) throw Error(ErrorKind::PreconditionViolation, "max_iterations must be >= 1");

    AgentState state;
    std::string code = initial_code;
    std::optional<std::string> last_rendered;
    std::string last_image;

    for (int it = 1; it <= config.max_iterations; ++it) {
        state.iteration = it;
        IterationRecord rec;
        rec.iteration = it;

        RenderOutcome r = render_with_repair(gateway, sb, code, config.max_repairs_per_iteration, config.timeout);
        state.repair_count += r.repairs;
        rec.repairs = r.repairs;
        code = r.code;
        rec.code_sha256 = sha256_hex(code);
        if (!r.result.ok()) {
            rec.error = r.result.failure_message();
            state.transcript.push_back(std::move(rec));
            continue;
        }
        rec.rendered = true;
        last_rendered = code;
        last_image = r.result.primary_image();

        std::string feedback;
        try {
            feedback = gateway.complete(llm::tasks::kImageScore, gateway.render("img_score", {}),
                                        {image, r.result.primary_image()})
                           .text;
            rec.judge_response = feedback;
            rec.score = llm::parse_score(feedback);
        } catch (const Error& e) {
            rec.error = e.what();
        }

        if (rec.score && (!state.best_score || *rec.score > *state.best_score)) {
            state.best_score = rec.score;
            state.best_code = code;
            state.best_image = last_image;
        }
        if (rec.score && *rec.score > config.threshold) {
            state.status = AgentStatus::Converged;
            state.transcript.push_back(std::move(rec));
            break;
        }
        if (it < config.max_iterations) {
            try {
                const std::string prompt = gateway.render(
                    "rescore", {{"code", code}, {"feedback", feedback.empty() ? "(no evaluator feedback)" : feedback}});
                code = sandbox::extract_code_block(
                    gateway.complete(llm::tasks::kRescore, prompt, {image, r.result.primary_image()}).text);
                rec.refined = true;
            } catch (const Error& e) {
                if (!rec.error.empty()) rec.error += "; ";
                rec.error += e.what();
            }
        }
        state.transcript.push_back(std::move(rec));
    }

    if (state.status == AgentStatus::Running) {
        if (!last_rendered) {
            state.status = AgentStatus::Abandoned;
        } else {
            state.status = AgentStatus::MaxIter;
            if (!state.best_code) {
                state.best_code = last_rendered;
                state.best_image = last_image;
            }
        }
    }
    spdlog::debug("agent finished: {} after {} iterations", to_string(state.status), state.iteration);
    return state;
}

}  // namespace forge::agent
