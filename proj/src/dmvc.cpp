#include "spim/dmvc.hpp"

#include "spim/error.hpp"

namespace spim {

DmvcCounters operator-(const DmvcCounters& a, const DmvcCounters& b) {
  return DmvcCounters{a.cm_cache_scans - b.cm_cache_scans, a.cm_ds_scans - b.cm_ds_scans,
                      a.sm_cache_scans - b.sm_cache_scans, a.sm_ds_scans - b.sm_ds_scans,
                      a.sync_messages - b.sync_messages};
}

std::string format_counters(const DmvcCounters& c) {
  std::string out;
  out += "cm_cache_scans=" + std::to_string(c.cm_cache_scans) + "\n";
  out += "cm_ds_scans=" + std::to_string(c.cm_ds_scans) + "\n";
  out += "sm_cache_scans=" + std::to_string(c.sm_cache_scans) + "\n";
  out += "sm_ds_scans=" + std::to_string(c.sm_ds_scans) + "\n";
  out += "sync_messages=" + std::to_string(c.sync_messages) + "\n";
  return out;
}

LocalStoreView::LocalStoreView(std::shared_ptr<const DataStore> store) : store_(std::move(store)) {
  if (!store_) throw Error(Errc::contract_violation, "store view needs a data store");
}

std::uint64_t LocalStoreView::scan(const Query& q) {
  try {
    return ds_scan(*store_, q).records_scanned;
  } catch (const Error& e) {
    if (e.code() != Errc::not_found) throw;
    const Table* t = store_->table(q.table);
    return t != nullptr ? t->size() : 0;
  }
}

RemoteStoreView::RemoteStoreView(std::unique_ptr<Transport> transport, std::string client_id, std::string token)
    : transport_(std::move(transport)), client_id_(std::move(client_id)), token_(std::move(token)) {
  if (!transport_) throw Error(Errc::contract_violation, "remote store view needs a transport");
}

std::uint64_t RemoteStoreView::scan(const Query& q) {
  RequestEnvelope req{client_id_ + "-ds-" + std::to_string(++sequence_), client_id_, token_, q};
  ResponseEnvelope resp = transport_->roundtrip(req);
  if (resp.request_id != req.request_id) throw Error(Errc::malformed, "store view reply does not echo the request");
  return resp.records.size();
}

DmvcController::DmvcController(ClientOptions options, std::unique_ptr<Transport> transport,
                               std::unique_ptr<StoreView> replica_view, CostMeter* meter)
    : options_(std::move(options)),
      transport_(std::move(transport)),
      replica_view_(std::move(replica_view)),
      meter_(meter),
      model_(options_.cache_capacity, meter) {
  if (!replica_view_) throw Error(Errc::contract_violation, "dmvc client needs a data store view");
}

DmvcCounters DmvcController::counters() const {
  DmvcCounters c;
  c.cm_cache_scans = model_.counters().cache_scans;
  c.cm_ds_scans = cm_ds_scans_;
  c.sync_messages = sync_messages_;
  if (auto server = transport_->server_counters()) {
    c.sm_cache_scans = server->dc_reads_attempted_by_sm;
    c.sm_ds_scans = server->ds_scans;
  }
  return c;
}

void DmvcController::sync_models(const Query& q, const ResponseEnvelope& result) {
  model_.store(q, result);
  ++sync_messages_;
}

DmvcTransaction DmvcController::request(const Query& q) {
  std::lock_guard lock(mu_);
  const DmvcCounters before = counters();
  DmvcTransaction tx;
  std::string id = options_.client_id + "-" + std::to_string(++sequence_);
  if (!q.valid()) {
    tx.response = ResponseEnvelope::failure(id, ErrorCode::malformed);
    return tx;
  }

  if (auto cached = model_.lookup(q)) {
    cached->request_id = id;
    tx.document = model_.to_xml(*cached);
    tx.response = std::move(*cached);
    tx.delta = counters() - before;
    return tx;
  }

  // The duplicated client model also searches the store, remotely.
  ++cm_ds_scans_;
  std::uint64_t scanned = replica_view_->scan(q);
  if (meter_ != nullptr) {
    meter_->charge_scan(CostEvent::client_store_scan, scanned);
    meter_->charge_round_trip();
  }

  RequestEnvelope req{id, options_.client_id, options_.token, q};
  ResponseEnvelope resp = transport_->roundtrip(req);
  if (resp.request_id != id) throw Error(Errc::malformed, "response id does not echo the request");
  if (resp.ok()) {
    sync_models(q, resp);
    tx.document = model_.to_xml(resp);
  }
  tx.response = std::move(resp);
  tx.delta = counters() - before;
  return tx;
}

}  // namespace spim
