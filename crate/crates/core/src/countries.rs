//! Known bidding-zone codes with display names and IANA time zones.

/// (EIC code, ISO 3166 alpha-2 code, country name, time zone)
const KNOWN: &[(&str, &str, &str, &str)] = &[
    ("10YAL-KESH-----5", "AL", "Albania", "Europe/Tirane"),
    ("10YAT-APG------L", "AT", "Austria", "Europe/Vienna"),
    ("10YBE----------2", "BE", "Belgium", "Europe/Brussels"),
    ("10YCA-BULGARIA-R", "BG", "Bulgaria", "Europe/Sofia"),
    ("10YHR-HEP------M", "HR", "Croatia", "Europe/Zagreb"),
    ("10YCZ-CEPS-----N", "CZ", "Czech Republic", "Europe/Prague"),
    ("10Y1001A1001A65H", "DK", "Denmark", "Europe/Copenhagen"),
    ("10Y1001A1001A39I", "EE", "Estonia", "Europe/Tallinn"),
    ("10YFI-1--------U", "FI", "Finland", "Europe/Helsinki"),
    ("10YFR-RTE------C", "FR", "France", "Europe/Paris"),
    ("10Y1001A1001A83F", "DE", "Germany", "Europe/Berlin"),
    ("10YGR-HTSO-----Y", "GR", "Greece", "Europe/Athens"),
    ("10YHU-MAVIR----U", "HU", "Hungary", "Europe/Budapest"),
    ("10YIE-1001A00010", "IE", "Ireland", "Europe/Dublin"),
    ("10YIT-GRTN-----B", "IT", "Italy", "Europe/Rome"),
    ("10YLV-1001A00074", "LV", "Latvia", "Europe/Riga"),
    ("10YLT-1001A0008Q", "LT", "Lithuania", "Europe/Vilnius"),
    ("10YLU-CEGEDEL-NQ", "LU", "Luxembourg", "Europe/Luxembourg"),
    ("10YMK-MEPSO----8", "MK", "Macedonia", "Europe/Skopje"),
    ("10YCS-CG-TSO---S", "ME", "Montenegro", "Europe/Podgorica"),
    ("10YNL----------L", "NL", "Netherlands", "Europe/Amsterdam"),
    ("10YNO-0--------C", "NO", "Norway", "Europe/Oslo"),
    ("10YPL-AREA-----S", "PL", "Poland", "Europe/Warsaw"),
    ("10YPT-REN------W", "PT", "Portugal", "Europe/Lisbon"),
    ("10YRO-TEL------P", "RO", "Romania", "Europe/Bucharest"),
    ("10YCS-SERBIATSOV", "RS", "Serbia", "Europe/Belgrade"),
    ("10YSK-SEPS-----K", "SK", "Slovakia", "Europe/Bratislava"),
    ("10YSI-ELES-----O", "SI", "Slovenia", "Europe/Ljubljana"),
    ("10YES-REE------0", "ES", "Spain", "Europe/Madrid"),
    ("10YSE-1--------K", "SE", "Sweden", "Europe/Stockholm"),
    ("10YCH-SWISSGRIDZ", "CH", "Switzerland", "Europe/Zurich"),
    ("10YGB----------A", "GB", "United Kingdom", "Europe/London"),
];

fn lookup(code: &str) -> Option<&'static (&'static str, &'static str, &'static str, &'static str)> {
    KNOWN.iter().find(|(eic, iso, _, _)| *eic == code || *iso == code)
}

/// Display name for an EIC or two-letter code.
pub fn country_name(code: &str) -> Option<&'static str> {
    lookup(code).map(|k| k.2)
}

pub fn default_zone(code: &str) -> Option<&'static str> {
    lookup(code).map(|k| k.3)
}

/// Two-letter code of a known area.
pub fn iso_code(code: &str) -> Option<&'static str> {
    lookup(code).map(|k| k.1)
}
