import locale
import os
import sys

# 支持的语言代码: 'en', 'zh-cn', 'zh-tw'
SUPPORTED_LANGUAGES = ('en', 'zh-cn', 'zh-tw')

TRANSLATIONS = {
    "en": {
        "run_start": "Running '{0}' (seed {1}) -> {2}",
        "run_done": "Run '{0}' finished: {1}/{2} checks passed",
        "check_pass": "[PASS] criterion {0} {1}: {2}",
        "check_fail": "[FAIL] criterion {0} {1}: {2}",
        "artifact_written": "Wrote {0}",
        "config_error": "Configuration error: {0}",
        "unknown_key": "unknown key '{0}' in section [{1}]",
        "unknown_section": "unknown section [{0}]",
        "invalid_value": "invalid parameters for '{0}': {1}",
        "bad_value": "cannot parse '{0}' = '{1}': {2}",
        "usage_no_dirs": "report needs at least one run directory",
        "summary_missing": "missing summary.json in {0}",
        "report_header": "Acceptance report ({0} runs)",
        "report_row": "{0:<8} {1:<40} {2}",
        "report_all_pass": "All criteria passed",
        "report_failed": "Failed criteria: {0}",
        "stage_failed": "Stage '{0}' failed: {1}",
        "computation_error": "Computation error: {0}",
        "impedance_report": "Z0(s) = {0}",
        "scattering_report": "K(s) = {0}",
        "broadband_report": "bath p0 spectrum: {0} peaks above threshold (isolated chains: {1})",
    },
    "zh-cn": {
        "run_start": "运行 '{0}' (种子 {1}) -> {2}",
        "run_done": "运行 '{0}' 完成: {1}/{2} 项检查通过",
        "check_pass": "[通过] 准则 {0} {1}: {2}",
        "check_fail": "[失败] 准则 {0} {1}: {2}",
        "artifact_written": "已写入 {0}",
        "config_error": "配置错误: {0}",
        "unknown_key": "区段 [{1}] 中的未知键 '{0}'",
        "unknown_section": "未知区段 [{0}]",
        "invalid_value": "'{0}' 的参数无效: {1}",
        "bad_value": "无法解析 '{0}' = '{1}': {2}",
        "usage_no_dirs": "report 至少需要一个运行目录",
        "summary_missing": "{0} 中缺少 summary.json",
        "report_header": "验收报告 ({0} 次运行)",
        "report_row": "{0:<8} {1:<40} {2}",
        "report_all_pass": "所有准则均通过",
        "report_failed": "未通过的准则: {0}",
        "stage_failed": "阶段 '{0}' 失败: {1}",
        "computation_error": "计算错误: {0}",
        "impedance_report": "Z0(s) = {0}",
        "scattering_report": "K(s) = {0}",
        "broadband_report": "热浴 p0 频谱: 超过阈值的峰 {0} 个 (孤立链: {1})",
    },
    "zh-tw": {
        "run_start": "執行 '{0}' (種子 {1}) -> {2}",
        "run_done": "執行 '{0}' 完成: {1}/{2} 項檢查通過",
        "check_pass": "[通過] 準則 {0} {1}: {2}",
        "check_fail": "[失敗] 準則 {0} {1}: {2}",
        "artifact_written": "已寫入 {0}",
        "config_error": "設定錯誤: {0}",
        "unknown_key": "區段 [{1}] 中的未知鍵 '{0}'",
        "unknown_section": "未知區段 [{0}]",
        "invalid_value": "'{0}' 的參數無效: {1}",
        "bad_value": "無法解析 '{0}' = '{1}': {2}",
        "usage_no_dirs": "report 至少需要一個執行目錄",
        "summary_missing": "{0} 中缺少 summary.json",
        "report_header": "驗收報告 ({0} 次執行)",
        "report_row": "{0:<8} {1:<40} {2}",
        "report_all_pass": "所有準則均通過",
        "report_failed": "未通過的準則: {0}",
        "stage_failed": "階段 '{0}' 失敗: {1}",
        "computation_error": "計算錯誤: {0}",
        "impedance_report": "Z0(s) = {0}",
        "scattering_report": "K(s) = {0}",
        "broadband_report": "熱浴 p0 頻譜: 超過閾值的峰 {0} 個 (孤立鏈: {1})",
    },
}


def _from_locale_name(name):
    if not name:
        return None
    if name.startswith('zh_TW') or name.startswith('zh_HK'):
        return 'zh-tw'
    if name.startswith('zh'):
        return 'zh-cn'
    if name.startswith('en'):
        return 'en'
    return None


# 語言偵測順序: 環境變數 > language_config.py > 系統 locale > 英文
def get_system_language():
    env_lang = os.environ.get('HEATBATH_LANG')
    if env_lang in SUPPORTED_LANGUAGES:
        return env_lang

    try:
        project_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
        if project_root not in sys.path:
            sys.path.insert(0, project_root)
        from language_config import LANGUAGE
        if LANGUAGE in SUPPORTED_LANGUAGES:
            return LANGUAGE
    except ImportError:
        pass

    try:
        lang = _from_locale_name(locale.getlocale()[0])
        if lang:
            return lang
    except (ValueError, TypeError):
        pass

    return _from_locale_name(os.environ.get('LANG', '').split('.')[0]) or 'en'


LANG = get_system_language()


def set_language(lang):
    global LANG
    if lang not in SUPPORTED_LANGUAGES:
        raise ValueError(f"unsupported language '{lang}', choose one of {SUPPORTED_LANGUAGES}")
    LANG = lang


def tr(key):
    """Translated message for `key`; English, then the key itself, as fallback."""
    table = TRANSLATIONS.get(LANG, TRANSLATIONS['en'])
    return table.get(key, TRANSLATIONS['en'].get(key, key))
