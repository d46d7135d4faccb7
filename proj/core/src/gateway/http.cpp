#include "fabric/gateway/http.hpp"

#include <httplib.h>

#include <memory>

#include "fabric/error.hpp"

namespace fabric::gateway {

namespace {

void write_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(2) + "\n", "application/json");
}

void write_error(httplib::Response& res, int status, const Error& e) {
  write_json(res, status, Json{{"error", std::string(to_string(e.code()))},
                               {"message", e.detail()}});
}

// Verifies the Bearer header; on failure writes the 401 and returns
// nothing.
std::optional<access::AccessToken> authenticate(const GatewayContext& ctx,
                                                const httplib::Request& req,
                                                httplib::Response& res) {
  const std::string header = req.get_header_value("Authorization");
  if (header.rfind("Bearer ", 0) != 0) {
    write_json(res, 401, Json{{"error", "UNAUTHORIZED"}, {"message", "Bearer token required"}});
    return std::nullopt;
  }
  try {
    return ctx.verifier.verify(header.substr(7));
  } catch (const Error& e) {
    write_error(res, 401, e);
    return std::nullopt;
  }
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::schema_not_found: return 404;
    case ErrorCode::malformed_envelope:
    case ErrorCode::checksum_mismatch:
    case ErrorCode::malformed_manifest: return 400;
    default: return 500;
  }
}

}  // namespace

void mount_gateway_routes(httplib::Server& server, GatewayContext context) {
  auto ctx = std::make_shared<GatewayContext>(std::move(context));

  server.Post("/api/v1/records", [ctx](const httplib::Request& req, httplib::Response& res) {
    auto token = authenticate(*ctx, req, res);
    if (!token) return;
    try {
      Json doc = Json::parse(req.body);
      Record record = parse_record(doc);
      if (!token->covers(ctx->environment, record.study_id)) {
        write_json(res, 403, Json{{"error", "UNAUTHORIZED"},
                                  {"message", "token does not cover this study"}});
        return;
      }
      SubmitResult result = ctx->ingest->submit(record);
      const int status = result.status == SubmitStatus::accepted   ? 201
                         : result.status == SubmitStatus::duplicate ? 200
                                                                     : 422;
      write_json(res, status, result.to_json());
    } catch (const Json::exception& e) {
      write_json(res, 400, Json{{"error", "MALFORMED_ENVELOPE"}, {"message", e.what()}});
    } catch (const Error& e) {
      write_error(res, status_for(e.code()), e);
    }
  });

  server.Post("/api/v1/batches", [ctx](const httplib::Request& req, httplib::Response& res) {
    auto token = authenticate(*ctx, req, res);
    if (!token) return;
    try {
      BatchInput files;
      for (const auto& [name, part] : req.files) {
        files[name] = part.content;
      }
      if (files.empty() && !req.body.empty()) {
        // Non-multipart fallback: the body is the manifest itself.
        files["batch.json"] = req.body;
      }
      BatchReport report = ctx->ingest->submit_batch(files, [&](const Record& record) {
        return token->covers(ctx->environment, record.study_id);
      });
      write_json(res, 200, report.to_json());
    } catch (const Error& e) {
      write_error(res, status_for(e.code()), e);
    }
  });

  server.Get("/api/v1/schemas/:task_id",
             [ctx](const httplib::Request& req, httplib::Response& res) {
               auto token = authenticate(*ctx, req, res);
               if (!token) return;
               const std::string task_id = req.path_params.at("task_id");
               auto schema = ctx->schemas->cide_for_task(task_id);
               if (!schema) {
                 write_json(res, 404, Json{{"error", "SCHEMA_NOT_FOUND"},
                                           {"message", "no schema for task '" + task_id + "'"}});
                 return;
               }
               write_json(res, 200, schema->to_json());
             });
}

}  // namespace fabric::gateway
