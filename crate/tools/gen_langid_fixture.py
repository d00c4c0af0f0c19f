#!/usr/bin/env python3
"""Writes the held-out language-identification fixture.

Each sentence joins two distinct clauses of one language, drawn with a fixed
seed, so the file is reproducible: python3 tools/gen_langid_fixture.py
"""
import json
import random
from pathlib import Path

CLAUSES = {
    "en": [
        "a young girl is feeding the ducks", "the sky is grey and windy",
        "an old man reads under a lamp", "the bakery sells warm rolls",
        "my cousin fixed the broken window", "the football match ended late",
        "a cat sleeps on the warm roof", "the meeting was moved to Friday",
        "we should book the tickets soon", "the lorry is blocking the bridge",
        "the garden smells of roses", "nobody answered the phone",
    ],
    "de": [
        "ein junges Mädchen füttert die Enten", "der Himmel ist grau und windig",
        "ein alter Mann liest unter der Lampe", "die Bäckerei verkauft warme Brötchen",
        "mein Cousin hat das kaputte Fenster repariert", "das Fußballspiel endete spät",
        "eine Katze schläft auf dem warmen Dach", "die Besprechung wurde auf Freitag verschoben",
        "wir sollten die Karten bald buchen", "der Lastwagen blockiert die Brücke",
        "der Garten duftet nach Rosen", "niemand ist ans Telefon gegangen",
    ],
    "fr": [
        "une jeune fille nourrit les canards", "le ciel est gris et venteux",
        "un vieil homme lit sous la lampe", "la boulangerie vend des petits pains chauds",
        "mon cousin a réparé la fenêtre cassée", "le match de football s'est terminé tard",
        "un chat dort sur le toit chaud", "la réunion a été déplacée à vendredi",
        "nous devrions réserver les billets bientôt", "le camion bloque le pont",
        "le jardin sent la rose", "personne n'a répondu au téléphone",
    ],
    "es": [
        "una niña está dando de comer a los patos", "el cielo está gris y hace viento",
        "un anciano lee debajo de la lámpara", "la panadería vende panecillos calientes",
        "mi primo arregló la ventana rota", "el partido de fútbol terminó tarde",
        "un gato duerme en el tejado caliente", "la reunión se cambió al viernes",
        "deberíamos reservar las entradas pronto", "el camión está bloqueando el puente",
        "el jardín huele a rosas", "nadie contestó el teléfono",
    ],
    "pt": [
        "uma menina está dando comida aos patos", "o céu está cinzento e com vento",
        "um velho lê debaixo do candeeiro", "a padaria vende pãezinhos quentes",
        "o meu primo consertou a janela partida", "o jogo de futebol acabou tarde",
        "um gato dorme no telhado quente", "a reunião foi adiada para sexta-feira",
        "devíamos reservar os bilhetes em breve", "o caminhão está bloqueando a ponte",
        "o jardim cheira a rosas", "ninguém atendeu o telefone",
    ],
    "tr": [
        "küçük bir kız ördekleri besliyor", "gökyüzü gri ve rüzgârlı",
        "yaşlı bir adam lambanın altında okuyor", "fırın sıcak çörek satıyor",
        "kuzenim kırık pencereyi tamir etti", "futbol maçı geç bitti",
        "bir kedi sıcak çatıda uyuyor", "toplantı cumaya ertelendi",
        "biletleri yakında ayırtmalıyız", "kamyon köprüyü kapatıyor",
        "bahçe gül kokuyor", "kimse telefona cevap vermedi",
    ],
    "ru": [
        "маленькая девочка кормит уток", "небо серое и ветреное",
        "старик читает под лампой", "пекарня продаёт тёплые булочки",
        "мой двоюродный брат починил разбитое окно", "футбольный матч закончился поздно",
        "кошка спит на тёплой крыше", "собрание перенесли на пятницу",
        "нам стоит скорее купить билеты", "грузовик перегородил мост",
        "в саду пахнет розами", "никто не ответил на звонок",
    ],
    "uk": [
        "маленька дівчинка годує качок", "небо сіре й вітряне",
        "старий чоловік читає під лампою", "пекарня продає теплі булочки",
        "мій двоюрідний брат полагодив розбите вікно", "футбольний матч закінчився пізно",
        "кішка спить на теплому даху", "збори перенесли на п'ятницю",
        "нам варто швидше придбати квитки", "вантажівка перегородила міст",
        "у саду пахне трояндами", "ніхто не відповів на дзвінок",
    ],
    "bg": [
        "малко момиче храни патиците", "небето е сиво и ветровито",
        "възрастен мъж чете под лампата", "пекарната продава топли кифли",
        "братовчед ми поправи счупения прозорец", "футболният мач свърши късно",
        "котка спи на топлия покрив", "срещата беше преместена за петък",
        "трябва скоро да си купим билетите", "камионът блокира моста",
        "градината ухае на рози", "никой не вдигна телефона",
    ],
    "zh": [
        "一个小女孩在喂鸭子", "天空灰蒙蒙的还刮着风", "一位老人在灯下看书",
        "面包店卖热乎乎的小面包", "我表哥修好了破窗户", "足球比赛结束得很晚",
        "一只猫在温暖的屋顶上睡觉", "会议改到了星期五", "我们应该尽快订票",
        "卡车挡住了桥", "花园里有玫瑰的香味", "没有人接电话",
    ],
    "ja": [
        "小さな女の子がアヒルに餌をあげている", "空は灰色で風が強い",
        "おじいさんがランプの下で本を読んでいる", "パン屋さんは温かいロールパンを売っている",
        "いとこが割れた窓を直してくれた", "サッカーの試合は遅く終わった",
        "猫が暖かい屋根の上で寝ている", "会議は金曜日に変更された",
        "早めにチケットを予約したほうがいい", "トラックが橋をふさいでいる",
        "庭はバラの香りがする", "誰も電話に出なかった",
    ],
    "ko": [
        "어린 소녀가 오리에게 먹이를 주고 있다", "하늘은 흐리고 바람이 분다",
        "노인이 램프 아래에서 책을 읽고 있다", "빵집에서 따뜻한 롤빵을 판다",
        "사촌이 깨진 창문을 고쳤다", "축구 경기가 늦게 끝났다",
        "고양이가 따뜻한 지붕 위에서 자고 있다", "회의가 금요일로 옮겨졌다",
        "표를 빨리 예약해야 한다", "트럭이 다리를 막고 있다",
        "정원에서 장미 향기가 난다", "아무도 전화를 받지 않았다",
    ],
    "ar": [
        "فتاة صغيرة تطعم البط", "السماء رمادية والرياح قوية",
        "رجل عجوز يقرأ تحت المصباح", "المخبز يبيع الخبز الساخن",
        "ابن عمي أصلح النافذة المكسورة", "انتهت مباراة كرة القدم متأخرة",
        "قطة تنام على السطح الدافئ", "تم تأجيل الاجتماع إلى يوم الجمعة",
        "يجب أن نحجز التذاكر قريبا", "الشاحنة تسد الجسر",
        "رائحة الورد تملأ الحديقة", "لم يرد أحد على الهاتف",
    ],
}

JOINERS = {
    "en": ", and ", "de": ", und ", "fr": ", et ", "es": " y ", "pt": " e ",
    "tr": ", ", "ru": ", а ", "uk": ", а ", "bg": ", а ", "zh": "，",
    "ja": "。", "ko": ". ", "ar": " و",
}

def main():
    rng = random.Random(20240917)
    out = Path(__file__).resolve().parent.parent / "crates/core/tests/fixtures/langid_heldout.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    for code in sorted(CLAUSES):
        clauses = CLAUSES[code]
        combos = [(a, b) for a in range(len(clauses)) for b in range(len(clauses)) if a != b]
        for a, b in rng.sample(combos, 100):
            text = clauses[a] + JOINERS[code] + clauses[b]
            text = text[0].upper() + text[1:]
            lines.append(json.dumps({"language": code, "text": text}, ensure_ascii=False))
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")

if __name__ == "__main__":
    main()
