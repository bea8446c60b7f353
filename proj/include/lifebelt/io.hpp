#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lifebelt/config.hpp"
#include "lifebelt/filters.hpp"
#include "lifebelt/model.hpp"
#include "lifebelt/pmcmc.hpp"

namespace lifebelt {

// CSV artifacts start with the config echo as '#' comment lines; readers skip
// them. Every write throws IoError when the file cannot be written.

/// `t,h_in,y_deaths`, rows t = 1..T; h_in on row t is h_{t-1}. Throws IoError
/// naming the line for malformed content.
Dataset parse_dataset_csv(std::string_view text, std::string_view origin, const X0Prior& prior);
Dataset read_dataset_csv(const std::filesystem::path& path, const X0Prior& prior);
std::string dataset_csv(const Dataset& data, const RunConfig& echo);

/// `t,x`, rows t = 0..T.
std::string latent_csv(const LatentPath& path, const RunConfig& echo);

/// `t,particle,x,norm_w,group,resampled_from`.
std::string trajectories_csv(const FilterResult& result, const RunConfig& echo);

/// `iter,gamma1,gamma2,p_h,p_d,p_r,loglik,accepted`. Row 0 is the initial state.
std::string trace_csv(const ChainTrace& trace, const RunConfig& echo);

/// Non-finite reals become the strings "-inf", "inf", "nan".
nlohmann::json json_real(double v);
nlohmann::json config_json(const RunConfig& echo);
nlohmann::json filter_result_json(const FilterResult& result, const RunConfig& echo);
nlohmann::json summary_json(const PosteriorSummary& summary, const ChainTrace& trace,
                            const RunConfig& echo);

std::string echo_comment(const RunConfig& echo);
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view content);

}  // namespace lifebelt
