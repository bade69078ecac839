#!/usr/bin/env python3
"""Regenerate crates/core/data/dom-api-catalog.txt from TypeScript's lib.dom.d.ts.

The catalog holds every global constructor/variable and function declared by the
DOM typings, followed by the members of the core DOM/HTML interfaces scripts use
to touch the page. Order is first-seen and must stay stable across regenerations
of the same typings file.

usage: gen_dom_catalog.py path/to/lib.dom.d.ts > dom-api-catalog.txt
"""
import re
import sys

CORE = """EventTarget Node Element HTMLElement Document Window Navigator Location History
Storage Event ParentNode ChildNode NonElementParentNode DocumentOrShadowRoot
GlobalEventHandlers WindowOrWorkerGlobalScope Animatable ElementCSSInlineStyle InnerHTML
Slottable NavigatorID NavigatorLanguage NavigatorOnLine NavigatorStorage NavigatorCookies
NavigatorContentUtils Screen Performance Console XMLHttpRequest XMLHttpRequestEventTarget
CSSStyleDeclaration DOMTokenList NodeList HTMLCollectionBase Range Selection
MutationObserver IntersectionObserver ResizeObserver Crypto Response Request Headers URL
URLSearchParams MessagePort Worker WebSocket Blob FileReader FormData Text CharacterData
Attr NamedNodeMap DOMRect DOMRectReadOnly ShadowRoot CustomElementRegistry HTMLDocument
DocumentFragment WindowEventHandlers WindowLocalStorage WindowSessionStorage AbstractRange
CustomEvent MouseEvent KeyboardEvent UIEvent TouchEvent PointerEvent FocusEvent
MessageEvent HTMLFormElement HTMLInputElement HTMLAnchorElement HTMLImageElement
HTMLIFrameElement HTMLScriptElement HTMLMediaElement HTMLVideoElement HTMLCanvasElement
CanvasRenderingContext2D HTMLSelectElement HTMLTextAreaElement HTMLButtonElement
HTMLLinkElement HTMLStyleElement HTMLMetaElement HTMLTableElement HTMLTemplateElement
Geolocation Notification ServiceWorkerContainer IDBFactory Cache CacheStorage
BroadcastChannel EventSource TreeWalker NodeIterator DOMParser XMLSerializer Clipboard
Permissions MediaDevices VisualViewport PerformanceObserver PerformanceEntry
PerformanceResourceTiming PerformanceNavigationTiming""".split()


def main(path):
    src = open(path, encoding="utf-8").read()
    members = {}
    iface = re.compile(r"^interface (\w+)(?:<[^>]*>)?(?: extends [^{]*)?\{\n(.*?)^\}", re.M | re.S)
    for m in iface.finditer(src):
        found = re.findall(r"^    (?:readonly )?(\w+)\??[(:<]", m.group(2), re.M)
        members.setdefault(m.group(1), []).extend(found)

    names, seen = [], set()

    def add(n):
        if n not in seen and not n.startswith("_"):
            seen.add(n)
            names.append(n)

    for n in re.findall(r"^declare var (\w+):", src, re.M):
        add(n)
    for n in re.findall(r"^declare function (\w+)", src, re.M):
        add(n)
    for iface_name in CORE:
        for n in members.get(iface_name, []):
            add(n)

    print("# DOM / HTML DOM API names, one per line.")
    print("# Generated by scripts/gen_dom_catalog.py from TypeScript lib.dom.d.ts")
    print("# (Apache-2.0; derived from the W3C/WHATWG Web IDL).")
    print(f"# {len(names)} names.")
    for n in names:
        print(n)


if __name__ == "__main__":
    main(sys.argv[1])
