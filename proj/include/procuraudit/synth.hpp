#pragma once

// Synthetic contract generator: the test substrate standing in for the
// confidential procurement dataset. Calibrated so log amounts correlate
// around 0.95 and duplicates/date inversions appear on demand.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "procuraudit/csv.hpp"
#include "procuraudit/errors.hpp"
#include "procuraudit/ingest.hpp"
#include "procuraudit/numfmt.hpp"
#include "procuraudit/rng.hpp"

namespace procuraudit::synth {

struct SynthConfig {
    std::size_t n_contracts = 1000;
    double anomaly_rate = 0.0;       // in [0, 0.2]
    std::uint64_t seed = 0;
    double duplicate_rate = 0.0;     // fraction of rows re-emitted with perturbed amounts
    double date_inversion_rate = 0.0;
    std::vector<std::string> vocab_pool; // description templates; defaults used when empty

    void validate() const {
        if (n_contracts < 10) throw DegenerateInput("n_contracts >= 10");
        if (anomaly_rate < 0.0 || anomaly_rate > 0.2) throw DegenerateInput("anomaly_rate in [0, 0.2]");
        if (duplicate_rate < 0.0 || duplicate_rate > 1.0) throw DegenerateInput("duplicate_rate in [0,1]");
        if (date_inversion_rate < 0.0 || date_inversion_rate > 1.0)
            throw DegenerateInput("date_inversion_rate in [0,1]");
    }
};

enum class RowKind { normal, planted_anomaly, duplicate, date_inverted };

inline const char* row_kind_name(RowKind k) {
    switch (k) {
        case RowKind::normal: return "normal";
        case RowKind::planted_anomaly: return "planted_anomaly";
        case RowKind::duplicate: return "duplicate";
        case RowKind::date_inverted: return "date_inverted";
    }
    return "normal";
}

struct SynthOutput {
    std::string csv;                 // same dialect `ingest` consumes (point decimals)
    std::vector<RowKind> ground_truth; // one entry per CSV data row
};

namespace detail {

inline const std::vector<std::string>& default_templates() {
    static const std::vector<std::string> t = {
        "construccion de acueducto veredal y obras complementarias",
        "suministro de materiales para mantenimiento vial",
        "prestacion de servicios profesionales de apoyo juridico",
        "compraventa de equipos de computo para la alcaldia",
        "interventoria tecnica administrativa y financiera",
        "adecuacion de infraestructura educativa municipal",
        "suministro de alimentacion escolar para instituciones",
        "obra civil pavimentacion de vias urbanas",
        "consultoria para estudios y disenos de saneamiento basico",
        "mantenimiento preventivo y correctivo de vehiculos oficiales",
        "dotacion de mobiliario para centros de salud",
        "prestacion de servicios de vigilancia y seguridad privada",
    };
    return t;
}

// Tokens that only planted anomalies use, so text features carry signal too.
inline const std::vector<std::string>& rare_tokens() {
    static const std::vector<std::string> t = {"emergencia", "urgencia", "adjudicacion",
                                               "extraordinaria", "adicional"};
    return t;
}

inline const std::vector<std::string>& contract_types() {
    static const std::vector<std::string> t = {"Compraventa", "Suministro", "Obra",
                                               "Prestacion de Servicios"};
    return t;
}

inline const std::vector<std::string>& modalities() {
    static const std::vector<std::string> t = {
        "Licitacion Publica", "Subasta", "Seleccion Abreviada de Menor Cuantia (Ley 1150 de 2007)",
        "Contratacion Directa (Ley 1150 de 2007)"};
    return t;
}

// 360-day calendar (30-day months) starting 2007-01-01; monotonic
// non-decreasing in serial, which the inversion flags rely on.
inline ingest::Date day_offset(int serial) {
    int y = 2007 + serial / 360;
    int m = 1 + (serial % 360) / 30;
    int d = 1 + serial % 30;
    if (m == 2 && d > 28) d = 28;
    return {y, m, d};
}

} // namespace detail

inline SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    Rng rng(splitmix64_mix(cfg.seed ^ 0x5a17d5ceULL));
    const auto& templates = cfg.vocab_pool.empty() ? detail::default_templates() : cfg.vocab_pool;

    SynthOutput out;
    std::size_t n_anomalies = static_cast<std::size_t>(std::llround(cfg.anomaly_rate * cfg.n_contracts));
    std::size_t n_inverted = static_cast<std::size_t>(std::llround(cfg.date_inversion_rate * cfg.n_contracts));

    std::vector<ingest::RawContract> base;
    std::vector<RowKind> kinds;
    for (std::size_t i = 0; i < cfg.n_contracts; ++i) {
        ingest::RawContract rec;
        RowKind kind = RowKind::normal;
        if (i < n_anomalies)
            kind = RowKind::planted_anomaly;
        else if (i < n_anomalies + n_inverted)
            kind = RowKind::date_inverted;

        char id[32];
        std::snprintf(id, sizeof(id), "CON-%06zu", i);
        rec.id_objeto_contrato = id;
        rec.nivel = rng.next_double() < 0.5 ? "TERRITORIAL" : "NACIONAL";
        rec.orden = "Orden " + std::to_string(1 + rng.next_below(3));
        rec.nit_entidad = std::to_string(800000000 + rng.next_below(99999999));
        rec.nombre_entidad = "Entidad " + std::to_string(1 + rng.next_below(40));
        rec.tipo_modalidad = detail::modalities()[rng.next_below(detail::modalities().size())];
        rec.numero_constancia = std::to_string(10000000 + rng.next_below(89999999));
        rec.tipo_contrato = detail::contract_types()[rng.next_below(detail::contract_types().size())];
        rec.estado_proceso = rng.next_double() < 0.85 ? "Celebrado" : "Liquidado";
        rec.nombre_contratista = "Contratista " + std::to_string(1 + rng.next_below(200));
        rec.nit_contratista = std::to_string(900000000 + rng.next_below(99999999));

        // log1p(cuantia) ~ N(13, 2); log1p(valor_def) = 0.97 * that + N(0, 0.25)
        double g = 13.0 + 2.0 * rng.next_normal();
        double h = 0.97 * g + 0.5 * rng.next_normal();
        double cuantia = std::expm1(std::max(g, 0.0));
        double valor_def = std::expm1(std::max(h, 0.0));
        if (kind == RowKind::planted_anomaly) {
            double factor = 5.0 + 5.0 * rng.next_double(); // 5-10x inflation
            valor_def = (cuantia + 1.0) * factor;
        }
        rec.cuantia = cuantia;
        rec.valor_definitivo = valor_def;
        rec.valor_contrato = cuantia;
        rec.valor_adiciones = rng.next_double() < 0.2 ? std::optional<double>(0.05 * cuantia) : std::nullopt;
        rec.valor_total = cuantia + rec.valor_adiciones.value_or(0.0);

        int day = static_cast<int>(rng.next_below(360 * 6));
        int award_gap = 10 + static_cast<int>(rng.next_below(60));
        if (kind == RowKind::date_inverted) {
            day = std::max(day, award_gap + 1); // keep the inverted award date in range
            rec.fecha_adjudicado = detail::day_offset(day - award_gap);
        } else {
            rec.fecha_adjudicado = detail::day_offset(day + award_gap);
        }
        rec.fechacreacion = detail::day_offset(day);
        rec.fecha_convocado = detail::day_offset(day + 2);
        rec.fecha_firma_contrato = detail::day_offset(day + award_gap + 5);

        std::string detalle = templates[rng.next_below(templates.size())];
        // anomalies always carry a rare token, but a small background rate keeps
        // those tokens from perfectly splitting the classes on their own
        if (kind == RowKind::planted_anomaly || rng.next_double() < 0.03)
            detalle += " " + detail::rare_tokens()[rng.next_below(detail::rare_tokens().size())];
        rec.detalle_objeto = detalle;
        rec.objeto_contrato = rec.tipo_contrato.value() + " municipal";

        base.push_back(std::move(rec));
        kinds.push_back(kind);
    }

    // interleave duplicates right after their source rows
    std::size_t n_duplicates = static_cast<std::size_t>(std::llround(cfg.duplicate_rate * cfg.n_contracts));
    std::ostringstream body;
    ingest::write_canonical_header(body);
    for (std::size_t i = 0; i < base.size(); ++i) {
        ingest::write_canonical_row(body, base[i]);
        out.ground_truth.push_back(kinds[i]);
        if (i < n_duplicates) {
            ingest::RawContract dup = base[i];
            dup.cuantia = dup.cuantia.value() * (1.0 + rng.next_double());
            dup.valor_definitivo = dup.valor_definitivo.value() * (1.0 + rng.next_double());
            ingest::write_canonical_row(body, dup);
            out.ground_truth.push_back(RowKind::duplicate);
        }
    }
    out.csv = body.str();
    return out;
}

// Ground truth JSON-lines: {"row": int, "kind": str}, row is the 0-based
// data-row position.
inline void write_ground_truth(std::ostream& os, const std::vector<RowKind>& kinds) {
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        nlohmann::json j{{"row", i}, {"kind", row_kind_name(kinds[i])}};
        os << j.dump() << '\n';
    }
}

} // namespace procuraudit::synth
