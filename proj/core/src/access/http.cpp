#include "fabric/access/http.hpp"

#include <httplib.h>

#include <memory>

#include "fabric/error.hpp"

namespace fabric::access {

namespace {

void write_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

std::optional<AccessToken> authenticate(const AccessContext& ctx, const httplib::Request& req,
                                        httplib::Response& res) {
  const std::string header = req.get_header_value("Authorization");
  if (header.rfind("Bearer ", 0) != 0) {
    write_json(res, 401, Json{{"error", "UNAUTHORIZED"}, {"message", "Bearer token required"}});
    return std::nullopt;
  }
  try {
    return ctx.verifier.verify(header.substr(7));
  } catch (const Error& e) {
    write_json(res, 401, Json{{"error", std::string(to_string(e.code()))},
                              {"message", e.detail()}});
    return std::nullopt;
  }
}

}  // namespace

void mount_access_routes(httplib::Server& server, AccessContext context) {
  auto ctx = std::make_shared<AccessContext>(std::move(context));

  server.Get("/api/v1/datasets", [ctx](const httplib::Request& req, httplib::Response& res) {
    auto token = authenticate(*ctx, req, res);
    if (!token) return;
    Json datasets = Json::array();
    for (const auto& info : ctx->catalog->list_datasets(*token)) {
      datasets.push_back(info.to_json());
    }
    write_json(res, 200, Json{{"datasets", std::move(datasets)}});
  });

  server.Post("/api/v1/query", [ctx](const httplib::Request& req, httplib::Response& res) {
    auto token = authenticate(*ctx, req, res);
    if (!token) return;
    try {
      QueryRequest request = QueryRequest::from_json(Json::parse(req.body));
      QuerySeries series = ctx->catalog->query_series(request, *token);
      write_json(res, 200, series.to_json());
    } catch (const Json::exception& e) {
      write_json(res, 400, Json{{"error", "PARSE_ERROR"}, {"message", e.what()}});
    } catch (const Error& e) {
      const int status = e.code() == ErrorCode::unknown_dataset ? 404 : 400;
      write_json(res, status, Json{{"error", std::string(to_string(e.code()))},
                                   {"message", e.detail()}});
    }
  });
}

}  // namespace fabric::access
