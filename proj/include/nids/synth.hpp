#ifndef NIDS_SYNTH_HPP
#define NIDS_SYNTH_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "nids/common.hpp"

namespace nids {

/// Deterministic traffic simulator emitting CSV files in the NSL-KDD and
/// UNSW-NB15 record layouts. Attack classes separate cleanly on the
/// attacker-controllable volume/timing features and only partially on the
/// protocol-shape features, which is what makes the evasion/hardening loop
/// interesting to study at desk scale.
struct SynthConfig {
    std::size_t rows = 1000;
    double attack_fraction = 0.35;
    std::uint64_t seed = 0;
};

namespace synth_detail {

inline std::string num(double v) { return format_double(v); }
inline std::string inum(double v) { return std::to_string(static_cast<long long>(v)); }

inline std::string pick(Rng& rng, std::initializer_list<std::pair<const char*, double>> options) {
    double u = rng.uniform();
    double acc = 0.0;
    const char* last = "";
    for (const auto& [name, p] : options) {
        acc += p;
        last = name;
        if (u < acc) return name;
    }
    return last;
}

}  // namespace synth_detail

/// One NSL-KDD-layout row: 41 features, label, difficulty.
inline std::string synth_nsl_kdd_row(Rng& rng, bool attack) {
    using namespace synth_detail;
    // feature slots, defaulted to zero
    double duration = 0, src_bytes = 0, dst_bytes = 0;
    int land = 0, wrong_fragment = 0, urgent = 0, hot = 0, num_failed_logins = 0, logged_in = 0;
    int num_compromised = 0, root_shell = 0, su_attempted = 0, num_root = 0;
    int num_file_creations = 0, num_shells = 0, num_access_files = 0, num_outbound_cmds = 0;
    int is_host_login = 0, is_guest_login = 0;
    double count = 1, srv_count = 1;
    double serror = 0, srv_serror = 0, rerror = 0, srv_rerror = 0;
    double same_srv = 1, diff_srv = 0, srv_diff_host = 0;
    double dh_count = 0, dh_srv_count = 0, dh_same_srv = 0, dh_diff_srv = 0;
    double dh_same_src_port = 0, dh_srv_diff_host = 0, dh_serror = 0, dh_srv_serror = 0;
    double dh_rerror = 0, dh_srv_rerror = 0;
    std::string proto, service, flag, label;

    if (!attack) {
        label = "normal";
        proto = pick(rng, {{"tcp", 0.7}, {"udp", 0.2}, {"icmp", 0.1}});
        if (proto == "icmp")
            service = pick(rng, {{"ecr_i", 0.5}, {"eco_i", 0.5}});
        else
            service = pick(rng, {{"http", 0.45}, {"smtp", 0.15}, {"ftp", 0.1},
                                 {"domain_u", 0.2}, {"other", 0.1}});
        flag = pick(rng, {{"SF", 0.89}, {"REJ", 0.05}, {"RSTR", 0.05}, {"S0", 0.01}});
        duration = std::floor(-8.0 * std::log(1.0 - rng.uniform()));
        src_bytes = std::floor(std::exp(5.5 + 1.2 * rng.gaussian()));
        if (rng.uniform() < 0.02) src_bytes = std::floor(15000 + rng.uniform() * 6000);
        src_bytes = std::min(src_bytes, 21000.0);
        dst_bytes = std::floor(3.0 * src_bytes * (0.85 + 0.3 * rng.uniform()));
        count = 1 + std::floor(rng.uniform() * 20);
        bool chatty = rng.uniform() < 0.08;
        if (chatty) {
            // chatty client burst: flood-like volume counters on ordinary
            // protocol behaviour; the source of baseline false positives
            count = 60 + std::floor(rng.uniform() * 160);
            src_bytes = std::floor(rng.uniform() * 50);
            dst_bytes = 0;
            duration = 0;
        }
        srv_count = std::max(1.0, std::floor(count * (0.7 + 0.25 * rng.uniform())));
        if (chatty) srv_count = std::max(1.0, std::floor(count * (0.9 + 0.1 * rng.uniform())));
        serror = rng.uniform() * 0.5;
        srv_serror = serror * (0.8 + 0.4 * rng.uniform());
        rerror = rng.uniform() * 0.45;
        srv_rerror = rerror * (0.8 + 0.4 * rng.uniform());
        same_srv = rng.uniform() < 0.2 ? 1.0 : 0.5 + 0.5 * rng.uniform();
        diff_srv = rng.uniform() * 0.55;
        logged_in = rng.uniform() < 0.8 ? 1 : 0;
        hot = rng.uniform() < 0.1 ? 1 : 0;
        wrong_fragment = rng.uniform() < 0.02 ? 1 : 0;
    } else {
        double which = rng.uniform();
        if (which < 0.45) {
            label = "neptune";  // SYN flood
            proto = "tcp";
            service = pick(rng, {{"private", 0.7}, {"http", 0.3}});
            flag = pick(rng, {{"S0", 0.75}, {"SF", 0.2}, {"REJ", 0.05}});
            duration = 0;
            src_bytes = 0;
            dst_bytes = 0;
            count = 60 + std::floor(rng.uniform() * 120);
            srv_count = std::max(1.0, std::floor(count * (0.9 + 0.1 * rng.uniform())));
            serror = 0.45 + 0.55 * rng.uniform();
            srv_serror = serror;
            same_srv = rng.uniform() * 0.6;
            diff_srv = rng.uniform() * 0.3;
        } else if (which < 0.65) {
            label = pick(rng, {{"satan", 0.6}, {"portsweep", 0.4}});
            proto = pick(rng, {{"tcp", 0.8}, {"icmp", 0.2}});
            service = pick(rng, {{"private", 0.6}, {"other", 0.4}});
            flag = pick(rng, {{"REJ", 0.55}, {"SF", 0.35}, {"RSTR", 0.1}});
            duration = std::floor(rng.uniform() * 4);
            src_bytes = std::floor(rng.uniform() * 60);
            dst_bytes = std::floor(rng.uniform() * 80);
            count = 50 + std::floor(rng.uniform() * 130);
            srv_count = 1 + std::floor(rng.uniform() * 6);
            rerror = 0.3 + 0.7 * rng.uniform();
            srv_rerror = rerror;
            diff_srv = 0.4 + 0.6 * rng.uniform();
            same_srv = rng.uniform() * 0.4;
            serror = rng.uniform() * 0.5;
        } else if (which < 0.8) {
            label = "smurf";  // ICMP echo flood
            proto = "icmp";
            service = "ecr_i";
            flag = "SF";
            duration = 0;
            src_bytes = 520 + std::floor(rng.uniform() * 540);
            dst_bytes = 0;
            count = 150 + std::floor(rng.uniform() * 350);
            srv_count = count;
            same_srv = 1.0;
            serror = rng.uniform() * 0.2;
        } else if (which < 0.9) {
            label = "back";  // http payload flood
            proto = "tcp";
            service = "http";
            flag = "SF";
            duration = 1 + std::floor(rng.uniform() * 4);
            src_bytes = 5000 + std::floor(rng.uniform() * 4500);
            dst_bytes = 2000 + std::floor(rng.uniform() * 6000);
            count = 2 + std::floor(rng.uniform() * 10);
            srv_count = count;
            same_srv = 0.8 + 0.2 * rng.uniform();
            logged_in = 1;
            hot = 1 + static_cast<int>(std::floor(rng.uniform() * 3));
            serror = rng.uniform() * 0.3;
        } else {
            label = "teardrop";  // fragment overlap
            proto = "udp";
            service = "private";
            flag = "SF";
            duration = 0;
            src_bytes = 28;
            dst_bytes = 0;
            count = 30 + std::floor(rng.uniform() * 90);
            srv_count = count;
            same_srv = 1.0;
            wrong_fragment = 1 + static_cast<int>(std::floor(rng.uniform() * 3));
        }
    }

    // destination-host window statistics: independent of the per-connection
    // counters (the window covers many hosts), echoes only of the rate stats
    dh_count = 1 + std::floor(rng.uniform() * 255);
    dh_srv_count = 1 + std::floor(rng.uniform() * 255);
    dh_same_srv = same_srv;
    dh_diff_srv = diff_srv;
    dh_same_src_port = rng.uniform();
    dh_srv_diff_host = rng.uniform() * 0.3;
    dh_serror = serror * (0.8 + 0.4 * rng.uniform());
    dh_srv_serror = srv_serror;
    dh_rerror = rerror * (0.8 + 0.4 * rng.uniform());
    dh_srv_rerror = srv_rerror;
    srv_diff_host = rng.uniform() * 0.2;

    std::ostringstream o;
    auto r2 = [](double v) { return std::round(v * 100.0) / 100.0; };
    o << inum(duration) << "," << proto << "," << service << "," << flag << ","
      << inum(src_bytes) << "," << inum(dst_bytes) << "," << land << "," << wrong_fragment << ","
      << urgent << "," << hot << "," << num_failed_logins << "," << logged_in << ","
      << num_compromised << "," << root_shell << "," << su_attempted << "," << num_root << ","
      << num_file_creations << "," << num_shells << "," << num_access_files << ","
      << num_outbound_cmds << "," << is_host_login << "," << is_guest_login << ","
      << inum(count) << "," << inum(srv_count) << "," << num(r2(serror)) << ","
      << num(r2(srv_serror)) << "," << num(r2(rerror)) << "," << num(r2(srv_rerror)) << ","
      << num(r2(same_srv)) << "," << num(r2(diff_srv)) << "," << num(r2(srv_diff_host)) << ","
      << inum(dh_count) << "," << inum(dh_srv_count) << "," << num(r2(dh_same_srv)) << ","
      << num(r2(dh_diff_srv)) << "," << num(r2(dh_same_src_port)) << ","
      << num(r2(dh_srv_diff_host)) << "," << num(r2(dh_serror)) << "," << num(r2(dh_srv_serror))
      << "," << num(r2(dh_rerror)) << "," << num(r2(dh_srv_rerror)) << "," << label << ","
      << (1 + static_cast<int>(std::floor(rng.uniform() * 21)));
    return o.str();
}

/// One UNSW-NB15-layout row: 48 features + label.
inline std::string synth_unsw_row(Rng& rng, bool attack) {
    using namespace synth_detail;
    std::string srcip = "10.0.1." + std::to_string(1 + rng.uniform_index(8));
    std::string dstip = "149.171.60." + std::to_string(1 + rng.uniform_index(8));
    double sport = 1024 + std::floor(rng.uniform() * 60000);
    double dsport = 0;
    std::string proto, state, service;
    double dur = 0, sbytes = 0, dbytes = 0, sttl = 62, dttl = 62, sloss = 0, dloss = 0;
    double sload = 0, dload = 0, spkts = 2, dpkts = 2, rate = 0;
    double swin = 255, dwin = 255, stcpb = 0, dtcpb = 0;
    double smean = 0, dmean = 0, trans_depth = 0, res_len = 0;
    double sjit = 0, djit = 0, sinpkt = 0, dinpkt = 0, tcprtt = 0, synack = 0, ackdat = 0;
    int is_sm = 0, ct_state_ttl = 0, ct_http = 0, is_ftp = 0, ct_ftp = 0;
    double ct_srv_src = 1, ct_srv_dst = 1, ct_dst_ltm = 1, ct_src_ltm = 1;
    double ct_src_dport = 1, ct_dst_sport = 1, ct_dst_src = 1;
    int label = attack ? 1 : 0;

    if (!attack) {
        proto = pick(rng, {{"tcp", 0.75}, {"udp", 0.25}});
        state = pick(rng, {{"FIN", 0.75}, {"CON", 0.2}, {"INT", 0.05}});
        service = pick(rng, {{"http", 0.4}, {"dns", 0.25}, {"smtp", 0.1}, {"ftp", 0.05},
                             {"-", 0.2}});
        dsport = service == "http" ? 80 : (service == "dns" ? 53 : 25 + rng.uniform_index(1000));
        double u = rng.uniform();
        sttl = u < 0.4 ? 31 : (u < 0.85 ? 62 : 254);
        dttl = sttl == 254 ? 252 : (sttl == 31 ? 29 : 60);
        dur = 0.05 + 2.0 * rng.uniform() - std::log(1.0 - rng.uniform());
        sbytes = std::floor(std::exp(6.0 + 1.1 * rng.gaussian()));
        rate = 10 + rng.uniform() * 800;
        if (rng.uniform() < 0.05) {
            // bulk transfer burst: attack-like volume on benign protocol shape
            sbytes = std::floor(30000 + rng.uniform() * 25000);
            rate = 2000 + rng.uniform() * 8000;
        }
        sbytes = std::min(sbytes, 56000.0);
        dbytes = std::floor(2.2 * sbytes * (0.8 + 0.4 * rng.uniform()));
        spkts = std::max(2.0, std::floor(sbytes / 500.0));
        dpkts = std::max(2.0, std::floor(dbytes / 700.0));
        double uc = rng.uniform();
        ct_state_ttl = uc < 0.7 ? 0 : (uc < 0.92 ? 1 : 2);
        sinpkt = 5 + 100 * rng.uniform();
        sjit = 100 * rng.uniform();
        tcprtt = proto == "tcp" ? 0.05 + 0.2 * rng.uniform() : 0;
        ct_http = service == "http" ? 1 : 0;
        if (rng.uniform() < 0.1) {
            // one-way flow: request with no reply traffic
            dbytes = 0;
            dpkts = 0;
            dttl = 0;
        }
        double ub = rng.uniform();
        if (ub < 0.06) {
            // telemetry heartbeat: flood-like rate and tiny payloads on
            // ordinary protocol shape; baseline false-positive source
            rate = 8000 + rng.uniform() * 22000;
            sbytes = 100 + std::floor(rng.uniform() * 120);
            spkts = 2 + std::floor(rng.uniform() * 4);
            dbytes = 0;
            dpkts = 0;
            dur = 0.00001 + 0.0001 * rng.uniform();
            state = pick(rng, {{"CON", 0.7}, {"FIN", 0.3}});
        } else if (ub < 0.18) {
            // unanswered keep-alive probes: same protocol shape as the
            // state-exhaustion floods but at gentle, legitimate volume.
            // only the volume/timing features separate this traffic from
            // a flood, so flood volume is what a detector must key on here
            proto = rng.uniform() < 0.5 ? "udp" : "tcp";
            state = "INT";
            service = "-";
            sttl = 254;
            dttl = 0;
            ct_state_ttl = 2;
            rate = 200 + rng.uniform() * 1600;
            sbytes = 100 + std::floor(rng.uniform() * 120);
            spkts = 2 + std::floor(rng.uniform() * 4);
            dbytes = 0;
            dpkts = 0;
            dur = 0.00001 + 0.0001 * rng.uniform();
            sjit = 0;
            sinpkt = 0;
            tcprtt = 0;
            ct_http = 0;
        } else if (ub < 0.23) {
            // jittery interactive clients over lossy links: volume and shape
            // match fuzzing bursts; jitter relative to the send gap is the
            // only reliable separator (human traffic jitters far more)
            proto = "tcp";
            state = pick(rng, {{"FIN", 0.5}, {"CON", 0.5}});
            service = "-";
            dsport = 1024 + rng.uniform_index(5000);
            sttl = rng.uniform() < 0.5 ? 254 : 62;
            dttl = 60;
            dur = 0.5 + 4.0 * rng.uniform();
            sbytes = 2000 + std::floor(rng.uniform() * 16000);
            dbytes = std::floor(rng.uniform() * 400);
            spkts = 10 + std::floor(rng.uniform() * 40);
            dpkts = 2 + std::floor(rng.uniform() * 6);
            rate = 1200 + rng.uniform() * 6000;
            sinpkt = 50.0 * std::exp(rng.uniform() * std::log(60.0));
            sjit = sinpkt * (5.0 + 2.5 * rng.uniform());
            tcprtt = 0.05 + 0.2 * rng.uniform();
            ct_state_ttl = 1;
            ct_http = 0;
        }
        if (proto == "udp" || state == "INT") {
            swin = 0;
            dwin = 0;
        }
    } else {
        double which = rng.uniform();
        if (which < 0.4) {  // volumetric udp flood ("generic")
            proto = "udp";
            state = pick(rng, {{"INT", 0.75}, {"CON", 0.25}});
            service = "-";
            dsport = 53;
            sttl = rng.uniform() < 0.85 ? 254 : 62;
            dttl = 0;
            dur = 0.000005 + 0.00002 * rng.uniform();
            sbytes = 1400 + std::floor(rng.uniform() * 300);
            dbytes = 0;
            spkts = 2;
            dpkts = 0;
            rate = 12000 + rng.uniform() * 18000;
            ct_state_ttl = 2;
            swin = 0;
            dwin = 0;
        } else if (which < 0.65) {  // exploit sessions
            proto = "tcp";
            state = pick(rng, {{"FIN", 0.6}, {"INT", 0.4}});
            service = pick(rng, {{"http", 0.4}, {"ftp", 0.2}, {"-", 0.4}});
            dsport = 80;
            sttl = rng.uniform() < 0.6 ? 254 : 62;
            dttl = sttl == 254 ? 252 : 60;
            dur = 0.2 + 1.5 * rng.uniform();
            sbytes = 600 + std::floor(rng.uniform() * 5000);
            dbytes = 100 + std::floor(rng.uniform() * 1800);
            spkts = 4 + std::floor(rng.uniform() * 16);
            dpkts = 2 + std::floor(rng.uniform() * 10);
            rate = 2000 + rng.uniform() * 9000;
            ct_state_ttl = rng.uniform() < 0.4 ? 2 : 1;
            sinpkt = 500 + 2000 * rng.uniform();
        } else if (which < 0.85) {  // fuzzing bursts
            proto = "tcp";
            state = pick(rng, {{"FIN", 0.5}, {"CON", 0.5}});
            service = "-";
            dsport = 1024 + rng.uniform_index(5000);
            sttl = rng.uniform() < 0.5 ? 254 : 62;
            dttl = 60;
            dur = 0.5 + 4.0 * rng.uniform();
            sbytes = 2000 + std::floor(rng.uniform() * 16000);
            dbytes = std::floor(rng.uniform() * 400);
            spkts = 10 + std::floor(rng.uniform() * 40);
            dpkts = 2 + std::floor(rng.uniform() * 6);
            rate = 1200 + rng.uniform() * 6000;
            // machine-generated probes: jitter tracks the send gap tightly
            sinpkt = 50.0 * std::exp(rng.uniform() * std::log(60.0));
            sjit = sinpkt * (2.2 + 1.2 * rng.uniform());
            tcprtt = 0.05 + 0.2 * rng.uniform();
            ct_state_ttl = 1;
        } else {  // tcp state-exhaustion dos
            proto = "tcp";
            state = "INT";
            service = "-";
            dsport = 80;
            sttl = 254;
            dttl = 0;
            dur = 0.00001 + 0.0001 * rng.uniform();
            sbytes = 100 + std::floor(rng.uniform() * 120);
            dbytes = 0;
            spkts = 2 + std::floor(rng.uniform() * 4);
            dpkts = 0;
            rate = 8000 + rng.uniform() * 17000;
            ct_state_ttl = 2;
            swin = 0;
            dwin = 0;
        }
    }

    smean = spkts > 0 ? std::floor(sbytes / spkts) : 0;
    dmean = dpkts > 0 ? std::floor(dbytes / dpkts) : 0;
    sload = dur > 0 ? sbytes * 8.0 / dur : 0;
    dload = dur > 0 ? dbytes * 8.0 / dur : 0;
    ct_srv_src = 1 + rng.uniform_index(10);
    ct_srv_dst = 1 + rng.uniform_index(10);
    ct_dst_ltm = 1 + rng.uniform_index(8);
    ct_src_ltm = 1 + rng.uniform_index(8);
    ct_src_dport = 1 + rng.uniform_index(6);
    ct_dst_sport = 1 + rng.uniform_index(6);
    ct_dst_src = 1 + rng.uniform_index(6);
    double stime = 1.4e9 + std::floor(rng.uniform() * 1e6);
    double ltime = stime + std::ceil(dur);

    std::ostringstream o;
    auto r4 = [](double v) { return std::round(v * 10000.0) / 10000.0; };
    o << srcip << "," << inum(sport) << "," << dstip << "," << inum(dsport) << "," << proto << ","
      << state << "," << num(r4(dur)) << "," << inum(sbytes) << "," << inum(dbytes) << ","
      << inum(sttl) << "," << inum(dttl) << "," << inum(sloss) << "," << inum(dloss) << ","
      << service << "," << num(r4(sload)) << "," << num(r4(dload)) << "," << inum(spkts) << ","
      << inum(dpkts) << "," << inum(swin) << "," << inum(dwin) << "," << inum(stcpb) << ","
      << inum(dtcpb) << "," << inum(smean) << "," << inum(dmean) << "," << inum(trans_depth)
      << "," << inum(res_len) << "," << num(r4(sjit)) << "," << num(r4(djit)) << ","
      << inum(stime) << "," << inum(ltime) << "," << num(r4(sinpkt)) << "," << num(r4(dinpkt))
      << "," << num(r4(tcprtt)) << "," << num(r4(synack)) << "," << num(r4(ackdat)) << ","
      << is_sm << "," << ct_state_ttl << "," << ct_http << "," << is_ftp << "," << ct_ftp << ","
      << inum(ct_srv_src) << "," << inum(ct_srv_dst) << "," << inum(ct_dst_ltm) << ","
      << inum(ct_src_ltm) << "," << inum(ct_src_dport) << "," << inum(ct_dst_sport) << ","
      << inum(ct_dst_src) << "," << num(r4(rate)) << "," << label;
    return o.str();
}

/// Write a synthetic dataset file. kind is "nsl-kdd" or "unsw-nb15".
inline void write_synth_csv(const std::string& kind, const SynthConfig& cfg,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write synthetic dataset: " + path);
    for (std::size_t r = 0; r < cfg.rows; ++r) {
        Rng rng(Rng::substream(cfg.seed, 0x5f9dULL + r));
        bool attack = rng.uniform() < cfg.attack_fraction;
        if (kind == "nsl-kdd")
            out << synth_nsl_kdd_row(rng, attack) << "\n";
        else if (kind == "unsw-nb15")
            out << synth_unsw_row(rng, attack) << "\n";
        else
            throw Error("unknown synthetic dataset kind: " + kind);
    }
}

}  // namespace nids

#endif  // NIDS_SYNTH_HPP
