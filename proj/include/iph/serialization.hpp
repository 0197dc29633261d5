#pragma once

// JSON documents for fitted models:
//   {"p": 2, "pi": [...], "T": [[...], [...]], "family": "weibull",
//    "params": {"theta": 1.5}}
// PI models add "beta", "gamma", "link" and "standardization".

#include <json.hpp>
#include <string>

#include "iph/errors.hpp"
#include "iph/phase_type.hpp"
#include "iph/regression.hpp"

namespace iph::json {

using nlohmann::json;

inline json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw InputError(std::string("model JSON: '") + what + "' must be an array");
  Vector v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw InputError(std::string("model JSON: '") + what + "' must hold numbers");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

inline json rep_to_json(const PHRepresentation& rep) {
  json j;
  const auto p = rep.order();
  j["p"] = p;
  j["pi"] = vector_to_json(rep.pi());
  json T = json::array();
  for (Eigen::Index k = 0; k < p; ++k) T.push_back(vector_to_json(rep.T().row(k).transpose()));
  j["T"] = T;
  return j;
}

inline PHRepresentation rep_from_json(const json& j) {
  if (!j.is_object() || !j.contains("pi") || !j.contains("T"))
    throw InputError("model JSON: needs 'pi' and 'T'");
  const Vector pi = vector_from_json(j.at("pi"), "pi");
  const auto p = pi.size();
  if (j.contains("p") && j.at("p").get<Eigen::Index>() != p) throw InputError("model JSON: 'p' disagrees with 'pi'");
  const json& rows = j.at("T");
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != p)
    throw InputError("model JSON: 'T' must have p rows");
  Matrix T(p, p);
  for (Eigen::Index k = 0; k < p; ++k) {
    const Vector r = vector_from_json(rows[static_cast<std::size_t>(k)], "T");
    if (r.size() != p) throw InputError("model JSON: 'T' must be square");
    T.row(k) = r.transpose();
  }
  return PHRepresentation(pi, T);
}

inline const char* parameter_name(Family f) {
  return f == Family::gompertz ? "beta" : f == Family::weibull ? "theta" : "";
}

inline json to_json(const IPHModel& m) {
  if (m.inhom.shift() != 0.0) throw InputError("model JSON: shifted intensities are not serialisable");
  json j = rep_to_json(m.rep);
  j["family"] = to_string(m.inhom.family());
  json params = json::object();
  if (m.inhom.family() != Family::identity) params[parameter_name(m.inhom.family())] = m.inhom.parameter();
  j["params"] = params;
  return j;
}

inline IPHModel iph_from_json(const json& j) {
  PHRepresentation rep = rep_from_json(j);
  const Family f = family_from_string(j.value("family", std::string("identity")));
  if (f == Family::identity) return {std::move(rep), Inhomogeneity::identity()};
  const json params = j.value("params", json::object());
  if (!params.contains(parameter_name(f)))
    throw InputError(std::string("model JSON: params.") + parameter_name(f) + " is required");
  return {std::move(rep), Inhomogeneity::of(f, params.at(parameter_name(f)).get<double>())};
}

inline json to_json(const PIModel& m) {
  json j = rep_to_json(m.rep);
  j["family"] = to_string(m.family);
  json params = json::object();
  if (m.family != Family::identity) params[parameter_name(m.family)] = std::exp(m.gamma(0));
  j["params"] = params;
  j["beta"] = vector_to_json(m.beta);
  j["gamma"] = vector_to_json(m.gamma);
  j["link"] = m.link;
  json st = json::object();
  if (!m.standardization.empty()) {
    st["center"] = vector_to_json(m.standardization.center);
    st["scale"] = vector_to_json(m.standardization.scale);
  }
  j["standardization"] = st;
  return j;
}

inline PIModel pi_from_json(const json& j) {
  PIModel m{rep_from_json(j), family_from_string(j.value("family", std::string("identity"))), Vector(), Vector(),
            j.value("link", std::string("exp")), {}};
  m.beta = j.contains("beta") ? vector_from_json(j.at("beta"), "beta") : Vector();
  if (j.contains("gamma")) {
    m.gamma = vector_from_json(j.at("gamma"), "gamma");
  } else if (m.family != Family::identity) {
    m.gamma = Vector::Constant(1, std::log(iph_from_json(j).inhom.parameter()));
  }
  if (j.contains("standardization") && j.at("standardization").contains("center")) {
    m.standardization.center = vector_from_json(j.at("standardization").at("center"), "center");
    m.standardization.scale = vector_from_json(j.at("standardization").at("scale"), "scale");
  }
  m.validate();
  return m;
}

}  // namespace iph::json
